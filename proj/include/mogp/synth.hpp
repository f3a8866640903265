#pragma once

// Synthetic coupled channels with known delays and phases:
//   y_i(t) = offset_i + sum_l m_il A_l sin(2 pi f_l (t - d_i) + phi_i) + eps_i

#include <cstdint>
#include <string>
#include <vector>

#include "mogp/io.hpp"
#include "mogp/series.hpp"

namespace mogp {

struct LatentSignal {
  double frequency = 0.0;  // cycles/day
  double amplitude = 1.0;
};

struct SyntheticChannel {
  std::string name;
  double delay = 0.0;  // days
  double phase = 0.0;  // radians
  std::vector<double> mixing;  // one weight per latent, or a single broadcast weight
  double noise_std = 0.0;
  double offset = 0.0;
};

struct SyntheticSpec {
  std::size_t length = 100;
  double spacing = 1.0;  // days
  std::vector<LatentSignal> latent;
  std::vector<SyntheticChannel> channels;
  std::uint64_t seed = 0;
  std::string start_date = "2017-01-02";

  void validate() const;
};

SyntheticSpec synthetic_spec_from_json(const Json& j);
Json to_json(const SyntheticSpec& spec);

TimeSeriesSet generate(const SyntheticSpec& spec);

/// Wide CSV with calendar dates; spacing must be a whole number of days.
std::string synthetic_csv(const SyntheticSpec& spec, const TimeSeriesSet& data);

}  // namespace mogp
