#pragma once

// JSON and CSV persistence for the toolkit's data types.

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "mogp/analytics.hpp"
#include "mogp/gp.hpp"
#include "mogp/kernels.hpp"
#include "mogp/series.hpp"
#include "mogp/trainer.hpp"

namespace mogp {

using Json = nlohmann::ordered_json;

Json to_json(const KernelSpec& spec);
KernelSpec kernel_spec_from_json(const Json& j);

Json to_json(const GPModel& model);
GPModel model_from_json(const Json& j);

Json to_json(const TrialResult& trial);
TrialResult trial_from_json(const Json& j);

Json to_json(const InitReport& report);

Json to_json(const TimeSeriesSet& ts);
TimeSeriesSet series_from_json(const Json& j);

Json to_json(const CorrelationReport& report);
std::string correlation_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m);

/// Rows of channel,t,mean,variance,lo95,hi95.
struct PredictionRow {
  std::string channel;
  double t = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

/// Posterior rows; with `original` the mean and band edges are mapped through
/// each channel's inverse transforms and the variance by the delta method.
std::vector<PredictionRow> prediction_rows(const Posterior& post, const TimeSeriesSet& ts, bool original);
std::string predictions_csv(const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> parse_predictions_csv(const std::string& text);

Json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string dump(const Json& j);

}  // namespace mogp
