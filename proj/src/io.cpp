#include "mogp/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mogp/csv.hpp"
#include "mogp/error.hpp"

namespace mogp {

namespace {

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

// Row-major flattening of an M x N matrix.
Json flat(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

Eigen::VectorXd read_vec(const Json& j, const char* key) {
  const auto& a = j.at(key);
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) v(static_cast<Eigen::Index>(k)) = a[k].get<double>();
  return v;
}

Eigen::MatrixXd read_flat(const Json& j, const char* key, std::size_t rows, std::size_t cols) {
  const auto& a = j.at(key);
  if (a.size() != rows * cols)
    throw ConfigError(std::string("kernel spec: field '") + key + "' has wrong length");
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a[r * cols + c].get<double>();
  return m;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (std::isfinite(m(r, c)))
        row.push_back(m(r, c));
      else
        row.push_back(nullptr);
    }
    rows.push_back(row);
  }
  return rows;
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json to_json(const KernelSpec& spec) {
  Json j;
  j["variant"] = to_string(spec.variant());
  j["Q"] = spec.Q();
  j["M"] = spec.M();
  j["N"] = spec.N();
  Json comps = Json::array();
  for (const auto& c : spec.components()) {
    Json cj;
    cj["w"] = vec(c.weight);
    cj["mu"] = flat(c.mean);
    cj["sigma"] = flat(c.scale);
    cj["theta"] = flat(c.delay);
    cj["phi"] = vec(c.phase);
    comps.push_back(cj);
  }
  j["components"] = comps;
  return j;
}

KernelSpec kernel_spec_from_json(const Json& j) {
  return guarded("kernel spec", [&] {
    Variant v = parse_variant(j.at("variant").get<std::string>());
    auto M = j.at("M").get<std::size_t>(), N = j.at("N").get<std::size_t>(), Q = j.at("Q").get<std::size_t>();
    const auto& cs = j.at("components");
    if (cs.size() != Q) throw ConfigError("kernel spec: component count != Q");
    std::vector<SpectralComponent> comps;
    for (const auto& cj : cs) {
      SpectralComponent c;
      c.weight = read_vec(cj, "w");
      c.mean = read_flat(cj, "mu", M, N);
      c.scale = read_flat(cj, "sigma", M, N);
      c.delay = read_flat(cj, "theta", M, N);
      c.phase = read_vec(cj, "phi");
      comps.push_back(std::move(c));
    }
    return KernelSpec(v, M, N, std::move(comps));
  });
}

Json to_json(const GPModel& m) {
  Json j;
  j["kernel"] = to_json(m.spec);
  j["noise"] = vec(m.noise);
  j["prior_scales"] = vec(m.prior_scales);
  j["fit_meta"] = {{"nll", m.fit.nll}, {"seed", m.fit.seed}, {"iterations", m.fit.iterations}, {"jitter", m.fit.jitter}};
  return j;
}

GPModel model_from_json(const Json& j) {
  return guarded("model", [&] {
    GPModel m;
    m.spec = kernel_spec_from_json(j.at("kernel"));
    m.noise = read_vec(j, "noise");
    m.prior_scales = read_vec(j, "prior_scales");
    if (static_cast<std::size_t>(m.noise.size()) != m.spec.M() ||
        static_cast<std::size_t>(m.prior_scales.size()) != m.spec.M())
      throw ConfigError("model: noise/prior_scales length != M");
    if ((m.noise.array() < 0.0).any()) throw ConfigError("model: negative noise variance");
    if (j.contains("fit_meta")) {
      const auto& f = j["fit_meta"];
      m.fit.nll = f.value("nll", 0.0);
      m.fit.seed = f.value("seed", std::uint64_t{0});
      m.fit.iterations = f.value("iterations", 0);
      m.fit.jitter = f.value("jitter", 0.0);
    }
    return m;
  });
}

Json to_json(const TrialResult& t) {
  Json j;
  j["seed"] = t.seed;
  j["initial_objective"] = t.initial_objective;
  j["final_objective"] = t.final_objective;
  j["converged"] = t.converged;
  j["iterations"] = t.iterations;
  j["message"] = t.message;
  j["perturbation"] = {{"lognormal_std", t.lognormal_std}, {"additive_std", t.additive_std}};
  j["model"] = to_json(t.model);
  return j;
}

TrialResult trial_from_json(const Json& j) {
  return guarded("trial", [&] {
    TrialResult t;
    t.seed = j.value("seed", std::uint64_t{0});
    t.initial_objective = j.value("initial_objective", 0.0);
    t.final_objective = j.value("final_objective", 0.0);
    t.converged = j.value("converged", false);
    t.iterations = j.value("iterations", 0);
    t.message = j.value("message", std::string{});
    if (j.contains("perturbation")) {
      t.lognormal_std = j["perturbation"].value("lognormal_std", 0.0);
      t.additive_std = j["perturbation"].value("additive_std", 0.0);
    }
    t.model = model_from_json(j.at("model"));
    return t;
  });
}

Json to_json(const InitReport& r) {
  Json j;
  j["method"] = r.method;
  j["f_max"] = r.f_max;
  Json chans = Json::array();
  for (const auto& c : r.channels) {
    Json cj;
    cj["name"] = c.name;
    cj["variance"] = c.variance;
    cj["peak_frequencies"] = c.peak_frequencies;
    cj["peak_half_widths"] = c.peak_widths;
    cj["padded"] = c.padded;
    cj["psd_grid_size"] = c.psd.frequency.size();
    chans.push_back(cj);
  }
  j["channels"] = chans;
  return j;
}

Json to_json(const TimeSeriesSet& ts) {
  Json j;
  Json chans = Json::array();
  for (std::size_t c = 0; c < ts.num_channels(); ++c) {
    const auto& ch = ts.channels[c];
    Json cj;
    cj["name"] = ch.name;
    Json t = Json::array(), y = Json::array();
    for (const auto& o : ch.observations) {
      t.push_back(o.t);
      y.push_back(o.y);
    }
    cj["t"] = t;
    cj["y"] = y;
    Json tr = Json::array();
    for (const auto& r : ch.transforms) {
      if (r.kind == TransformKind::log)
        tr.push_back({{"kind", "log"}});
      else
        tr.push_back({{"kind", "detrend-linear"}, {"slope", r.slope}, {"intercept", r.intercept}});
    }
    cj["transforms"] = tr;
    Json rr = Json::array();
    for (const auto& r : ts.removed_ranges.at(c)) rr.push_back({r.start, r.end});
    cj["removed_ranges"] = rr;
    chans.push_back(cj);
  }
  j["channels"] = chans;
  j["train_mask"] = ts.train_mask;
  j["test_mask"] = ts.test_mask;
  j["seed"] = ts.seed;
  j["origin"] = ts.origin;
  return j;
}

TimeSeriesSet series_from_json(const Json& j) {
  return guarded("dataset", [&] {
    std::vector<Channel> chans;
    std::vector<std::vector<TimeRange>> ranges;
    for (const auto& cj : j.at("channels")) {
      Channel ch;
      ch.name = cj.at("name").get<std::string>();
      auto t = cj.at("t").get<std::vector<double>>();
      auto y = cj.at("y").get<std::vector<double>>();
      if (t.size() != y.size()) throw DataError("dataset: channel '" + ch.name + "' t/y length mismatch");
      for (std::size_t k = 0; k < t.size(); ++k) ch.observations.push_back({t[k], y[k]});
      for (const auto& r : cj.value("transforms", Json::array())) {
        std::string kind = r.at("kind").get<std::string>();
        if (kind == "log")
          ch.transforms.push_back({TransformKind::log, 0.0, 0.0});
        else if (kind == "detrend-linear")
          ch.transforms.push_back({TransformKind::detrend_linear, r.at("slope").get<double>(),
                                   r.at("intercept").get<double>()});
        else
          throw ConfigError("dataset: unknown transform '" + kind + "'");
      }
      std::vector<TimeRange> rr;
      for (const auto& r : cj.value("removed_ranges", Json::array())) rr.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
      ranges.push_back(std::move(rr));
      chans.push_back(std::move(ch));
    }
    TimeSeriesSet ts = make_series_set(std::move(chans), j.value("origin", std::string{}));
    ts.removed_ranges = std::move(ranges);
    ts.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("train_mask")) {
      ts.train_mask = j.at("train_mask").get<std::vector<IndexSet>>();
      ts.test_mask = j.at("test_mask").get<std::vector<IndexSet>>();
      if (ts.train_mask.size() != ts.num_channels() || ts.test_mask.size() != ts.num_channels())
        throw DataError("dataset: mask count != channel count");
      for (std::size_t c = 0; c < ts.num_channels(); ++c) {
        std::vector<int> seen(ts.channels[c].size(), 0);
        for (auto k : ts.train_mask[c]) seen.at(k) += 1;
        for (auto k : ts.test_mask[c]) seen.at(k) += 1;
        for (int s : seen)
          if (s != 1) throw DataError("dataset: masks of channel '" + ts.channels[c].name + "' do not partition it");
      }
    }
    return ts;
  });
}

Json to_json(const CorrelationReport& r) {
  Json j;
  j["labels"] = r.labels;
  j["normalization"] = to_string(r.normalization);
  j["kernel_corr"] = matrix_json(r.kernel_corr);
  j["empirical_corr"] = matrix_json(r.empirical_corr);
  j["warnings"] = r.warnings;
  return j;
}

std::string correlation_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  out << "channel";
  for (const auto& l : labels) out << ',' << csv::escape(l);
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << csv::escape(labels.at(static_cast<std::size_t>(r)));
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << csv::format_double(m(r, c));
    out << '\n';
  }
  return out.str();
}

std::vector<PredictionRow> prediction_rows(const Posterior& post, const TimeSeriesSet& ts, bool original) {
  auto bands = confidence_band(post, 0.95);
  std::vector<PredictionRow> rows;
  for (std::size_t r = 0; r < post.query.size(); ++r) {
    const auto rr = static_cast<Eigen::Index>(r);
    const std::size_t c = post.query.channel[r];
    PredictionRow row;
    row.channel = ts.channels.at(c).name;
    row.t = post.query.x(rr, 0);
    row.mean = post.mean(rr);
    row.variance = post.variance(rr);
    row.lo95 = bands[r].lo;
    row.hi95 = bands[r].hi;
    if (original) {
      const auto& log = ts.channels[c].transforms;
      double d = invert_derivative(log, row.t, row.mean);
      row.variance *= d * d;
      row.mean = invert_value(log, row.t, row.mean);
      row.lo95 = invert_value(log, row.t, row.lo95);
      row.hi95 = invert_value(log, row.t, row.hi95);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string predictions_csv(const std::vector<PredictionRow>& rows) {
  std::ostringstream out;
  out << "channel,t,mean,variance,lo95,hi95\n";
  for (const auto& r : rows)
    out << csv::escape(r.channel) << ',' << csv::format_double(r.t) << ',' << csv::format_double(r.mean) << ','
        << csv::format_double(r.variance) << ',' << csv::format_double(r.lo95) << ',' << csv::format_double(r.hi95)
        << '\n';
  return out.str();
}

std::vector<PredictionRow> parse_predictions_csv(const std::string& text) {
  auto rows = csv::parse(text);
  if (rows.empty() || rows.front().size() < 6 || rows.front()[0] != "channel")
    throw DataError("predictions csv: missing header channel,t,mean,variance,lo95,hi95");
  std::vector<PredictionRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 6) throw DataError("predictions csv row " + std::to_string(r + 1) + ": expected 6 columns");
    PredictionRow p;
    p.channel = row[0];
    try {
      p.t = std::stod(row[1]);
      p.mean = std::stod(row[2]);
      p.variance = std::stod(row[3]);
      p.lo95 = std::stod(row[4]);
      p.hi95 = std::stod(row[5]);
    } catch (const std::exception&) {
      throw DataError("predictions csv row " + std::to_string(r + 1) + ": non-numeric value");
    }
    out.push_back(p);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json read_json_file(const std::filesystem::path& path) {
  std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace mogp
