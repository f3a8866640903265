#pragma once

// Experiment orchestration behind the `mogp` command line tool.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mogp/analytics.hpp"
#include "mogp/io.hpp"
#include "mogp/series.hpp"
#include "mogp/synth.hpp"
#include "mogp/trainer.hpp"

namespace mogp {

inline constexpr const char* kVersion = "0.1.0";

struct RangeSpec {
  Json start;  // day offset (number) or ISO date (string)
  Json end;
};

struct ChannelMaskSpec {
  double random_fraction = 0.0;
  std::vector<RangeSpec> ranges;
};

struct ExperimentConfig {
  std::filesystem::path data_path;
  CsvSchema schema = CsvSchema::wide;
  std::vector<TransformKind> transforms;
  std::map<std::string, ChannelMaskSpec> mask;
  std::uint64_t mask_seed = 0;
  std::vector<Variant> variants{Variant::mosm};
  TrainingConfig training;  // variant field unused; see `variants`
  std::filesystem::path outputs = "out";
  ReportScale report_scale = ReportScale::transformed;
  Normalization normalization = Normalization::diagonal_sqrt;
  std::size_t prediction_grid = 200;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<ReportScale> scale;
  std::optional<std::size_t> trials;
  std::optional<Variant> variant;
  std::optional<std::size_t> Q;
};

/// Relative paths in the config resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const Json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void apply_overrides(ExperimentConfig& cfg, const Overrides& o);
Json to_json(const ExperimentConfig& cfg);

/// Load, transform and mask the configured dataset.
TimeSeriesSet prepare_dataset(const ExperimentConfig& cfg, std::vector<std::string>* warnings = nullptr);

struct VariantRun {
  Variant variant;
  FitResult fit;
  MetricsReport metrics;
  CorrelationReport correlation;
};

struct TrainSummary {
  TimeSeriesSet dataset;
  std::vector<VariantRun> runs;
  std::vector<std::string> warnings;
};

/// load -> transform -> mask -> init -> fit -> aggregate, then writes
/// models.json, metrics.csv, correlation.json, predictions.csv,
/// dataset.json and run-manifest.json into cfg.outputs. Stage failures are
/// rethrown with the stage name prepended, keeping their ErrorKind.
TrainSummary run_train(const ExperimentConfig& cfg);

Json models_json(const std::vector<VariantRun>& runs);

/// Best (lowest objective) trial of the run for `variant`, or of the first run.
GPModel load_best_model(const std::filesystem::path& models_path, std::optional<Variant> variant = std::nullopt);

struct QuerySpec {
  std::size_t grid = 0;                               // uniform points per channel over its observed span
  std::map<std::string, std::vector<double>> times;   // explicit timestamps per channel
  std::vector<std::string> channels;                  // restrict grid to these; empty means all
};

InputSet build_query(const TimeSeriesSet& ts, const QuerySpec& q);

std::vector<PredictionRow> run_predict(const GPModel& model, const TimeSeriesSet& ts, const QuerySpec& q,
                                       ReportScale scale);

/// Writes data.csv, truth.json (the synthetic parameters echoed back) and dataset.json.
void run_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
               std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace mogp
