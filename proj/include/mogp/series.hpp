#pragma once

// Multi-channel time series storage: CSV ingestion, invertible transforms
// and train/test masking.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mogp {

struct Observation {
  double t = 0.0;  // days from the dataset origin
  double y = 0.0;
};

enum class TransformKind { detrend_linear, log };

struct TransformRecord {
  TransformKind kind = TransformKind::log;
  double slope = 0.0;  // detrend only, channel units per day
  double intercept = 0.0;

  bool operator==(const TransformRecord&) const = default;
};

struct Channel {
  std::string name;
  std::vector<Observation> observations;  // strictly increasing t
  std::vector<TransformRecord> transforms;

  std::size_t size() const { return observations.size(); }
};

using IndexSet = std::vector<std::size_t>;  // sorted ascending

struct TimeRange {
  double start = 0.0;
  double end = 0.0;
};

struct ChannelMask {
  double random_fraction = 0.0;
  std::vector<TimeRange> ranges;
};

struct MaskSpec {
  std::map<std::string, ChannelMask> channels;  // absent channel: keep everything
  std::uint64_t seed = 0;
};

struct TimeSeriesSet {
  std::vector<Channel> channels;
  std::vector<IndexSet> train_mask;
  std::vector<IndexSet> test_mask;
  std::vector<std::vector<TimeRange>> removed_ranges;  // per channel, for plotting
  std::uint64_t seed = 0;
  std::string origin;  // ISO date of t = 0, empty when unknown

  std::size_t num_channels() const { return channels.size(); }
  std::size_t channel_index(const std::string& name) const;
  std::size_t num_train() const;
  std::size_t num_test() const;
};

enum class CsvSchema { long_form, wide };

CsvSchema parse_schema(const std::string& name);

/// Builds a set with every observation in the training mask. Validates
/// finiteness, ordering and name uniqueness.
TimeSeriesSet make_series_set(std::vector<Channel> channels, std::string origin = {});

TimeSeriesSet load_csv(const std::filesystem::path& path, CsvSchema schema);
TimeSeriesSet parse_csv(const std::string& text, CsvSchema schema);

/// Days since 1970-01-01 for an ISO-8601 calendar date (YYYY-MM-DD).
long parse_iso_date(const std::string& text);
std::string format_iso_date(long days_since_epoch);

/// Least-squares line through the observations at `fit_indices` subtracted
/// from every observation.
Channel detrend_linear(const Channel& ch, std::span<const std::size_t> fit_indices);
Channel detrend_linear(const Channel& ch);
Channel log_transform(const Channel& ch);

/// Undo the transform log, newest record first.
Channel invert_transforms(const Channel& ch);
double invert_value(std::span<const TransformRecord> log, double t, double y);
/// d(original)/d(transformed) at (t, y); used to carry variances across scales.
double invert_derivative(std::span<const TransformRecord> log, double t, double y);

/// Applies transforms to every channel, fitting trends on training points only.
TimeSeriesSet transform_set(const TimeSeriesSet& ts, std::span<const TransformKind> order);

struct MaskResult {
  TimeSeriesSet set;
  std::vector<std::string> warnings;
};

MaskResult apply_mask(const TimeSeriesSet& ts, const MaskSpec& spec);

}  // namespace mogp
