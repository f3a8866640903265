#include "mogp/synth.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mogp/csv.hpp"
#include "mogp/error.hpp"
#include "mogp/rng.hpp"

namespace mogp {

void SyntheticSpec::validate() const {
  if (length < 2) throw ConfigError("synthetic: length must be at least 2");
  if (!(spacing > 0.0)) throw ConfigError("synthetic: spacing must be positive");
  if (latent.empty()) throw ConfigError("synthetic: at least one latent signal required");
  if (channels.empty()) throw ConfigError("synthetic: at least one channel required");
  const double nyquist = 0.5 / spacing;
  for (const auto& l : latent)
    if (!(l.frequency >= 0.0 && l.frequency < nyquist))
      throw ConfigError("synthetic: latent frequency " + csv::format_double(l.frequency) +
                        " is not below the Nyquist frequency " + csv::format_double(nyquist));
  for (const auto& c : channels) {
    if (c.name.empty()) throw ConfigError("synthetic: channel without a name");
    if (!(c.noise_std >= 0.0)) throw ConfigError("synthetic: noise std must be nonnegative");
    if (c.mixing.size() != 1 && c.mixing.size() != latent.size())
      throw ConfigError("synthetic: channel '" + c.name + "' mixing must have 1 or " +
                        std::to_string(latent.size()) + " weights");
  }
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
  try {
    SyntheticSpec s;
    s.length = j.at("length").get<std::size_t>();
    s.spacing = j.value("spacing", 1.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.start_date = j.value("start_date", s.start_date);
    for (const auto& l : j.at("latent")) s.latent.push_back({l.at("frequency").get<double>(), l.value("amplitude", 1.0)});
    for (const auto& c : j.at("channels")) {
      SyntheticChannel ch;
      ch.name = c.at("name").get<std::string>();
      ch.delay = c.value("delay", 0.0);
      ch.phase = c.value("phase", 0.0);
      if (c.contains("mixing")) {
        if (c["mixing"].is_array())
          ch.mixing = c["mixing"].get<std::vector<double>>();
        else
          ch.mixing = {c["mixing"].get<double>()};
      } else {
        ch.mixing = {1.0};
      }
      ch.noise_std = c.value("noise_std", 0.0);
      ch.offset = c.value("offset", 0.0);
      s.channels.push_back(std::move(ch));
    }
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
}

Json to_json(const SyntheticSpec& s) {
  Json j;
  j["length"] = s.length;
  j["spacing"] = s.spacing;
  j["seed"] = s.seed;
  j["start_date"] = s.start_date;
  Json lat = Json::array();
  for (const auto& l : s.latent) lat.push_back({{"frequency", l.frequency}, {"amplitude", l.amplitude}});
  j["latent"] = lat;
  Json ch = Json::array();
  for (const auto& c : s.channels)
    ch.push_back({{"name", c.name},
                  {"delay", c.delay},
                  {"phase", c.phase},
                  {"mixing", c.mixing},
                  {"noise_std", c.noise_std},
                  {"offset", c.offset}});
  j["channels"] = ch;
  return j;
}

TimeSeriesSet generate(const SyntheticSpec& s) {
  s.validate();
  std::vector<Channel> out;
  for (std::size_t c = 0; c < s.channels.size(); ++c) {
    const auto& sc = s.channels[c];
    Rng rng(derive_seed(s.seed, c));
    Channel ch;
    ch.name = sc.name;
    for (std::size_t k = 0; k < s.length; ++k) {
      double t = static_cast<double>(k) * s.spacing;
      double y = sc.offset;
      for (std::size_t l = 0; l < s.latent.size(); ++l) {
        double m = sc.mixing.size() == 1 ? sc.mixing[0] : sc.mixing[l];
        const auto& lat = s.latent[l];
        y += m * lat.amplitude * std::sin(2.0 * std::numbers::pi * lat.frequency * (t - sc.delay) + sc.phase);
      }
      if (sc.noise_std > 0.0) y += sc.noise_std * rng.normal();
      ch.observations.push_back({t, y});
    }
    out.push_back(std::move(ch));
  }
  return make_series_set(std::move(out), s.start_date);
}

std::string synthetic_csv(const SyntheticSpec& s, const TimeSeriesSet& data) {
  if (std::floor(s.spacing) != s.spacing) throw ConfigError("synthetic: CSV output needs whole-day spacing");
  const long origin = parse_iso_date(s.start_date);
  std::ostringstream out;
  out << "date";
  for (const auto& ch : data.channels) out << ',' << csv::escape(ch.name);
  out << '\n';
  for (std::size_t k = 0; k < s.length; ++k) {
    out << format_iso_date(origin + static_cast<long>(data.channels[0].observations[k].t));
    for (const auto& ch : data.channels) out << ',' << csv::format_double(ch.observations[k].y);
    out << '\n';
  }
  return out.str();
}

}  // namespace mogp
