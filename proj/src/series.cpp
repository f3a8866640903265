#include "mogp/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mogp/csv.hpp"
#include "mogp/error.hpp"
#include "mogp/rng.hpp"

namespace mogp {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_number(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::string fmt_t(double t) { return csv::format_double(t); }

void check_channel(const Channel& ch) {
  for (std::size_t k = 0; k < ch.observations.size(); ++k) {
    const auto& o = ch.observations[k];
    if (!std::isfinite(o.t) || !std::isfinite(o.y))
      throw DataError("channel '" + ch.name + "': non-finite observation at index " +
                      std::to_string(k));
    if (k > 0 && !(o.t > ch.observations[k - 1].t))
      throw DataError("channel '" + ch.name + "': timestamps not strictly increasing at t=" +
                      fmt_t(o.t));
  }
}

}  // namespace

std::size_t TimeSeriesSet::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].name == name) return i;
  throw DataError("unknown channel '" + name + "'");
}

std::size_t TimeSeriesSet::num_train() const {
  std::size_t n = 0;
  for (const auto& m : train_mask) n += m.size();
  return n;
}

std::size_t TimeSeriesSet::num_test() const {
  std::size_t n = 0;
  for (const auto& m : test_mask) n += m.size();
  return n;
}

CsvSchema parse_schema(const std::string& name) {
  if (name == "long") return CsvSchema::long_form;
  if (name == "wide") return CsvSchema::wide;
  throw ConfigError("unknown csv schema '" + name + "' (expected long or wide)");
}

TimeSeriesSet make_series_set(std::vector<Channel> channels, std::string origin) {
  std::set<std::string> names;
  for (const auto& ch : channels) {
    if (!names.insert(ch.name).second) throw DataError("duplicate channel name '" + ch.name + "'");
    check_channel(ch);
  }
  TimeSeriesSet ts;
  ts.channels = std::move(channels);
  ts.origin = std::move(origin);
  for (const auto& ch : ts.channels) {
    IndexSet all(ch.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    ts.train_mask.push_back(std::move(all));
    ts.test_mask.emplace_back();
    ts.removed_ranges.emplace_back();
  }
  return ts;
}

long parse_iso_date(const std::string& text) {
  using namespace std::chrono;
  auto bad = [&] { return DataError("malformed date '" + text + "' (expected YYYY-MM-DD)"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (text[i] < '0' || text[i] > '9') throw bad();
  int y = std::stoi(text.substr(0, 4));
  unsigned m = static_cast<unsigned>(std::stoi(text.substr(5, 2)));
  unsigned d = static_cast<unsigned>(std::stoi(text.substr(8, 2)));
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw bad();
  return sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(long days_since_epoch) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{days_since_epoch}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

TimeSeriesSet parse_csv(const std::string& text, CsvSchema schema) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw DataError("csv: missing header row");

  struct Raw {
    long day;
    double y;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Raw>> raw;
  std::map<std::string, std::set<long>> seen;

  auto add = [&](std::size_t row_no, const std::string& name, const std::string& date_cell,
                 const std::string& value_cell) {
    std::string value = trim(value_cell);
    if (value.empty()) return;
    long day;
    try {
      day = parse_iso_date(trim(date_cell));
    } catch (const DataError&) {
      throw DataError("csv row " + std::to_string(row_no) + ": malformed date '" + date_cell + "'");
    }
    double y;
    if (!parse_number(value, y))
      throw DataError("csv row " + std::to_string(row_no) + ": non-numeric value '" + value +
                      "' for channel '" + name + "'");
    if (!raw.count(name)) order.push_back(name);
    if (!seen[name].insert(day).second)
      throw DataError("csv row " + std::to_string(row_no) + ": duplicate observation (" + name +
                      ", " + trim(date_cell) + ")");
    raw[name].push_back({day, y});
  };

  if (schema == CsvSchema::long_form) {
    if (rows.front().size() < 3) throw DataError("csv: long schema needs columns channel,date,value");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() < 3)
        throw DataError("csv row " + std::to_string(r + 1) + ": expected 3 columns");
      std::string name = trim(row[0]);
      if (name.empty()) throw DataError("csv row " + std::to_string(r + 1) + ": empty channel name");
      add(r + 1, name, row[1], row[2]);
    }
  } else {
    const auto& header = rows.front();
    if (header.size() < 2) throw DataError("csv: wide schema needs date plus at least one channel");
    std::vector<std::string> names;
    for (std::size_t c = 1; c < header.size(); ++c) {
      names.push_back(trim(header[c]));
      if (names.back().empty()) throw DataError("csv: empty channel name in header");
    }
    if (std::set<std::string>(names.begin(), names.end()).size() != names.size())
      throw DataError("csv: duplicate channel name in header");
    // Header order fixes channel order even if a leading column is sparse.
    order = names;
    for (const auto& n : names) raw[n];
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() > header.size())
        throw DataError("csv row " + std::to_string(r + 1) + ": more cells than header columns");
      for (std::size_t c = 1; c < row.size(); ++c) add(r + 1, names[c - 1], row[0], row[c]);
    }
  }

  long origin = 0;
  bool any = false;
  for (auto& [name, obs] : raw)
    for (const auto& o : obs) {
      origin = any ? std::min(origin, o.day) : o.day;
      any = true;
    }

  std::vector<Channel> channels;
  for (const auto& name : order) {
    auto& obs = raw[name];
    std::sort(obs.begin(), obs.end(), [](const Raw& a, const Raw& b) { return a.day < b.day; });
    Channel ch;
    ch.name = name;
    for (const auto& o : obs) ch.observations.push_back({static_cast<double>(o.day - origin), o.y});
    channels.push_back(std::move(ch));
  }
  return make_series_set(std::move(channels), any ? format_iso_date(origin) : std::string{});
}

TimeSeriesSet load_csv(const std::filesystem::path& path, CsvSchema schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open csv file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

Channel detrend_linear(const Channel& ch, std::span<const std::size_t> fit_indices) {
  if (fit_indices.size() < 2)
    throw DataError("detrend: channel '" + ch.name + "' has fewer than 2 training points");
  double t_mean = 0.0, y_mean = 0.0;
  for (auto k : fit_indices) {
    t_mean += ch.observations.at(k).t;
    y_mean += ch.observations[k].y;
  }
  t_mean /= static_cast<double>(fit_indices.size());
  y_mean /= static_cast<double>(fit_indices.size());
  double sxy = 0.0, sxx = 0.0;
  for (auto k : fit_indices) {
    double dt = ch.observations[k].t - t_mean;
    sxy += dt * (ch.observations[k].y - y_mean);
    sxx += dt * dt;
  }
  double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double intercept = y_mean - slope * t_mean;

  Channel out = ch;
  for (auto& o : out.observations) o.y -= slope * o.t + intercept;
  out.transforms.push_back({TransformKind::detrend_linear, slope, intercept});
  return out;
}

Channel detrend_linear(const Channel& ch) {
  IndexSet all(ch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return detrend_linear(ch, all);
}

Channel log_transform(const Channel& ch) {
  Channel out = ch;
  for (auto& o : out.observations) {
    if (!(o.y > 0.0))
      throw DataError("log transform: channel '" + ch.name + "' has non-positive value at t=" +
                      fmt_t(o.t));
    o.y = std::log(o.y);
  }
  out.transforms.push_back({TransformKind::log, 0.0, 0.0});
  return out;
}

double invert_value(std::span<const TransformRecord> log, double t, double y) {
  for (auto it = log.rbegin(); it != log.rend(); ++it) {
    if (it->kind == TransformKind::detrend_linear)
      y += it->slope * t + it->intercept;
    else
      y = std::exp(y);
  }
  return y;
}

double invert_derivative(std::span<const TransformRecord> log, double t, double y) {
  double d = 1.0;
  for (auto it = log.rbegin(); it != log.rend(); ++it) {
    if (it->kind == TransformKind::detrend_linear) {
      y += it->slope * t + it->intercept;
    } else {
      y = std::exp(y);
      d *= y;
    }
  }
  return d;
}

Channel invert_transforms(const Channel& ch) {
  Channel out = ch;
  for (auto& o : out.observations) o.y = invert_value(ch.transforms, o.t, o.y);
  out.transforms.clear();
  return out;
}

TimeSeriesSet transform_set(const TimeSeriesSet& ts, std::span<const TransformKind> order) {
  TimeSeriesSet out = ts;
  for (std::size_t c = 0; c < out.channels.size(); ++c) {
    for (auto kind : order) {
      if (kind == TransformKind::log)
        out.channels[c] = log_transform(out.channels[c]);
      else
        out.channels[c] = detrend_linear(out.channels[c], out.train_mask[c]);
    }
  }
  return out;
}

MaskResult apply_mask(const TimeSeriesSet& ts, const MaskSpec& spec) {
  MaskResult result{ts, {}};
  auto& out = result.set;
  out.seed = spec.seed;

  for (const auto& [name, cm] : spec.channels) {
    bool known = std::any_of(ts.channels.begin(), ts.channels.end(),
                             [&](const Channel& c) { return c.name == name; });
    if (!known) result.warnings.push_back("mask names unknown channel '" + name + "'");
    if (!(cm.random_fraction >= 0.0 && cm.random_fraction <= 1.0))
      throw ConfigError("mask fraction for '" + name + "' outside [0,1]");
    for (const auto& r : cm.ranges)
      if (!(r.start < r.end)) throw ConfigError("mask range for '" + name + "' has start >= end");
  }

  for (std::size_t c = 0; c < out.channels.size(); ++c) {
    const auto& ch = out.channels[c];
    auto it = spec.channels.find(ch.name);
    if (it == spec.channels.end()) continue;
    const ChannelMask& cm = it->second;

    std::vector<bool> removed(ch.size(), false);
    for (auto k : out.test_mask[c]) removed[k] = true;

    IndexSet pool;
    for (auto k : out.train_mask[c]) {
      double t = ch.observations[k].t;
      bool in_range = std::any_of(cm.ranges.begin(), cm.ranges.end(),
                                  [t](const TimeRange& r) { return r.start <= t && t <= r.end; });
      if (in_range)
        removed[k] = true;
      else
        pool.push_back(k);
    }

    auto n_draw = static_cast<std::size_t>(std::llround(cm.random_fraction * static_cast<double>(pool.size())));
    Rng rng(derive_seed(spec.seed, c));
    // Partial Fisher-Yates: the first n_draw slots are a uniform sample without replacement.
    for (std::size_t i = 0; i < n_draw; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      removed[pool[i]] = true;
    }

    out.train_mask[c].clear();
    out.test_mask[c].clear();
    for (std::size_t k = 0; k < ch.size(); ++k) (removed[k] ? out.test_mask[c] : out.train_mask[c]).push_back(k);
    auto& rr = out.removed_ranges[c];
    rr.insert(rr.end(), cm.ranges.begin(), cm.ranges.end());

    if (out.train_mask[c].empty())
      result.warnings.push_back("channel '" + ch.name + "' has no training observations after masking");
  }
  return result;
}

}  // namespace mogp
