#include "mogp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mogp/error.hpp"

namespace mogp {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Domain {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish(double pad_fraction) {
    if (!std::isfinite(lo)) lo = hi = 0.0;
    if (hi - lo <= 0.0) {
      lo -= 1.0;
      hi += 1.0;
    }
    double pad = pad_fraction * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

}  // namespace

std::string render_svg(const PlotData& d, const SvgLayout& L) {
  Domain xs, ys;
  for (const auto& [t, y] : d.train) xs.add(t), ys.add(y);
  for (const auto& [t, y] : d.truth) xs.add(t), ys.add(y);
  for (const auto& p : d.predictions) {
    xs.add(p.t);
    ys.add(p.mean);
    ys.add(p.lo95);
    ys.add(p.hi95);
  }
  xs.finish(0.0);
  ys.finish(0.05);

  const double x0 = L.margin, x1 = L.width - L.margin, y0 = L.margin, y1 = L.height - L.margin;
  auto px = [&](double t) { return x0 + (std::clamp(t, xs.lo, xs.hi) - xs.lo) / (xs.hi - xs.lo) * (x1 - x0); };
  auto py = [&](double v) { return y1 - (std::clamp(v, ys.lo, ys.hi) - ys.lo) / (ys.hi - ys.lo) * (y1 - y0); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << num(L.width) << ' ' << num(L.height)
    << "\" width=\"" << num(L.width) << "\" height=\"" << num(L.height) << "\">\n";
  s << "<title>" << xml_escape(d.channel) << "</title>\n";
  s << "<rect class=\"frame\" x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0)
    << "\" height=\"" << num(y1 - y0) << "\" fill=\"none\" stroke=\"#888\"/>\n";

  for (const auto& r : d.ranges) {
    if (r.end < xs.lo || r.start > xs.hi) continue;
    double a = px(r.start), b = px(r.end);
    s << "<rect class=\"imputation\" x=\"" << num(a) << "\" y=\"" << num(y0) << "\" width=\"" << num(b - a)
      << "\" height=\"" << num(y1 - y0) << "\" fill=\"#e33\" fill-opacity=\"0.15\"/>\n";
  }

  if (!d.predictions.empty()) {
    std::ostringstream band;
    band << 'M';
    for (std::size_t k = 0; k < d.predictions.size(); ++k)
      band << (k ? " L" : "") << num(px(d.predictions[k].t)) << ',' << num(py(d.predictions[k].hi95));
    for (std::size_t k = d.predictions.size(); k-- > 0;)
      band << " L" << num(px(d.predictions[k].t)) << ',' << num(py(d.predictions[k].lo95));
    band << " Z";
    s << "<path class=\"band\" d=\"" << band.str() << "\" fill=\"#36c\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";

    s << "<polyline class=\"mean\" fill=\"none\" stroke=\"#36c\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < d.predictions.size(); ++k)
      s << (k ? " " : "") << num(px(d.predictions[k].t)) << ',' << num(py(d.predictions[k].mean));
    s << "\"/>\n";
  }

  if (!d.truth.empty()) {
    s << "<polyline class=\"truth\" fill=\"none\" stroke=\"#444\" stroke-dasharray=\"4 3\" points=\"";
    for (std::size_t k = 0; k < d.truth.size(); ++k)
      s << (k ? " " : "") << num(px(d.truth[k].first)) << ',' << num(py(d.truth[k].second));
    s << "\"/>\n";
  }

  for (const auto& [t, y] : d.train)
    s << "<circle class=\"train\" cx=\"" << num(px(t)) << "\" cy=\"" << num(py(y)) << "\" r=\"2\" fill=\"black\"/>\n";

  s << "<text x=\"" << num(x0) << "\" y=\"" << num(y0 - 12.0) << "\" font-size=\"14\" font-family=\"sans-serif\">"
    << xml_escape(d.channel) << "</text>\n";
  s << "<text x=\"" << num(x0) << "\" y=\"" << num(y1 + 18.0) << "\" font-size=\"11\" font-family=\"sans-serif\">t = "
    << num(xs.lo) << "</text>\n";
  s << "<text x=\"" << num(x1) << "\" y=\"" << num(y1 + 18.0)
    << "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"end\">t = " << num(xs.hi) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::vector<PlotData> plot_data(const TimeSeriesSet& ts, const std::vector<PredictionRow>& rows, bool original) {
  std::map<std::string, std::vector<PredictionRow>> by_channel;
  for (const auto& r : rows) by_channel[r.channel].push_back(r);
  for (const auto& [name, _] : by_channel) {
    bool known = std::any_of(ts.channels.begin(), ts.channels.end(), [&](const Channel& c) { return c.name == name; });
    if (!known) throw DataError("plot: predictions name channel '" + name + "' missing from the dataset");
  }

  std::vector<PlotData> out;
  for (std::size_t c = 0; c < ts.num_channels(); ++c) {
    const auto& ch = ts.channels[c];
    PlotData pd;
    pd.channel = ch.name;
    auto value = [&](std::size_t k) {
      const auto& o = ch.observations[k];
      return original ? invert_value(ch.transforms, o.t, o.y) : o.y;
    };
    for (auto k : ts.train_mask[c]) pd.train.emplace_back(ch.observations[k].t, value(k));
    for (auto k : ts.test_mask[c]) pd.truth.emplace_back(ch.observations[k].t, value(k));
    pd.ranges = ts.removed_ranges.at(c);
    pd.predictions = by_channel[ch.name];
    std::stable_sort(pd.predictions.begin(), pd.predictions.end(),
                     [](const PredictionRow& a, const PredictionRow& b) { return a.t < b.t; });
    out.push_back(std::move(pd));
  }
  return out;
}

}  // namespace mogp
