#pragma once

// Exact multi-output GP inference: negative log marginal likelihood, the
// MAP objective with its analytic gradient, and the predictive posterior.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "mogp/kernels.hpp"
#include "mogp/params.hpp"
#include "mogp/series.hpp"

namespace mogp {

struct FitMeta {
  double nll = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  double jitter = 0.0;
};

struct GPModel {
  KernelSpec spec;
  Eigen::VectorXd noise;         // per channel observation variance
  Eigen::VectorXd prior_scales;  // per channel std of the magnitude prior
  FitMeta fit;
};

/// Flattened observations: channel-major, ascending time within a channel.
struct TrainingData {
  InputSet inputs;
  Eigen::VectorXd y;

  std::size_t size() const { return inputs.size(); }
};

TrainingData training_data(const TimeSeriesSet& ts);
TrainingData test_data(const TimeSeriesSet& ts);

/// max |y| over each channel's training points.
Eigen::VectorXd prior_scales(const TimeSeriesSet& ts);

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Cholesky with the jitter ladder: none, then 1e-8 * mean(diag K) growing
/// tenfold up to 1e-2 * mean(diag K).
Factorization factorize(const Eigen::MatrixXd& K);

double nll(const KernelSpec& spec, const Eigen::VectorXd& noise, const TrainingData& data);
double nll(const GPModel& model, const TimeSeriesSet& ts);

/// sum_{q,i} w_qi^2 / (2 s_i^2)
double magnitude_penalty(const KernelSpec& spec, const Eigen::VectorXd& prior_scales);

/// nll plus the magnitude penalty with prior scales taken from the training data of `ts`.
double map_objective(const GPModel& model, const TimeSeriesSet& ts);

struct ObjectiveValue {
  double value = 0.0;  // nll + penalty
  double nll = 0.0;
  double jitter = 0.0;
  Eigen::VectorXd gradient;  // w.r.t. the unconstrained vector
};

ObjectiveValue map_objective_with_gradient(const ParamLayout& layout, const Eigen::VectorXd& x,
                                           const TrainingData& data, const Eigen::VectorXd& prior_scales);

struct Posterior {
  InputSet query;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // predictive: includes the query channel's noise
};

Posterior posterior(const KernelSpec& spec, const Eigen::VectorXd& noise, const TrainingData& data,
                    const InputSet& query);
Posterior posterior(const GPModel& model, const TimeSeriesSet& ts, const InputSet& query);

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<Band> confidence_band(const Posterior& p, double level);
double normal_quantile(double p);

}  // namespace mogp
