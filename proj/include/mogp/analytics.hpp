#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "mogp/gp.hpp"
#include "mogp/series.hpp"
#include "mogp/trainer.hpp"

namespace mogp {

enum class Normalization { diagonal_sqrt, weight_sum };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

/// rho_ij = k_ij(0) / sqrt(k_ii(0) k_jj(0)) (diagonal-sqrt), or normalized by
/// the per-channel sums of alpha_ii over components (weight-sum).
Eigen::MatrixXd kernel_cross_correlation(const KernelSpec& spec, Normalization mode = Normalization::diagonal_sqrt);

struct EmpiricalCorrelation {
  Eigen::MatrixXd matrix;  // NaN where two channels share fewer than 3 timestamps
  std::vector<std::string> warnings;
};

/// Pearson correlation over strictly co-timestamped observations (all
/// observations, regardless of mask).
EmpiricalCorrelation empirical_cross_correlation(const TimeSeriesSet& ts);

struct CorrelationReport {
  std::vector<std::string> labels;
  Eigen::MatrixXd kernel_corr;
  Eigen::MatrixXd empirical_corr;
  Normalization normalization = Normalization::diagonal_sqrt;
  std::vector<std::string> warnings;
};

CorrelationReport correlation_report(const GPModel& model, const TimeSeriesSet& ts, Normalization mode);

double nmae(std::span<const double> pred, std::span<const double> truth);
double nrmse(std::span<const double> pred, std::span<const double> truth);

enum class ReportScale { transformed, original };

std::string to_string(ReportScale s);
ReportScale parse_scale(const std::string& name);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Sample mean and (n-1) standard deviation; std is 0 for a single value.
MeanStd mean_std(std::span<const double> values);

/// Table-style "m ± s" text in units of 10^exponent.
struct FormattedMetric {
  int exponent = 0;
  std::string text;
};
FormattedMetric format_mean_std(const MeanStd& ms);

struct MetricsReport {
  std::string variant;
  MeanStd nmae;
  MeanStd nrmse;
  std::vector<double> trial_nmae;
  std::vector<double> trial_nrmse;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  ReportScale scale = ReportScale::transformed;
  std::vector<std::string> notes;  // e.g. channels that fell back to unnormalized errors
};

/// Per-channel test-set metrics averaged with equal channel weights, then
/// mean ± sample std across trials.
MetricsReport aggregate_trials(std::span<const TrialResult> results, const TimeSeriesSet& ts,
                               ReportScale scale = ReportScale::transformed);

std::string metrics_csv(std::span<const MetricsReport> reports);

}  // namespace mogp
