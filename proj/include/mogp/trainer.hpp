#pragma once

// Hyperparameter initialization from per-channel periodograms and MAP
// fitting with multi-start trials.

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mogp/gp.hpp"
#include "mogp/kernels.hpp"
#include "mogp/series.hpp"

namespace mogp {

struct Psd {
  std::vector<double> frequency;  // cycles/day, uniform on (0, f_max]
  std::vector<double> power;
};

/// 0.5 / median spacing of the given timestamps.
double nyquist_estimate(std::span<const double> t);

/// Lomb-Scargle periodogram of the mean-subtracted observations at
/// `indices`, on grid_size frequencies k * f_max / grid_size, k = 1..grid_size.
Psd estimate_psd(const Channel& ch, std::span<const std::size_t> indices, std::size_t grid_size, double f_max);
Psd estimate_psd(const Channel& ch, std::size_t grid_size);

struct Peak {
  std::size_t cell = 0;
  double frequency = 0.0;
  double power = 0.0;
  double half_width = 0.0;  // half width at half maximum, cycles/day; 0 if unresolved
};

/// Local maxima (the lowest-frequency cell excluded) chosen greedily by
/// power, at least two cells apart.
std::vector<Peak> pick_peaks(const Psd& psd, std::size_t count);

struct ChannelInit {
  std::string name;
  Psd psd;
  std::vector<double> peak_frequencies;
  std::vector<double> peak_widths;
  std::vector<bool> padded;  // frequency drawn at random, no periodogram peak
  double variance = 0.0;
};

struct InitReport {
  std::string method = "lomb-scargle periodogram peaks";
  double f_max = 0.0;
  std::vector<ChannelInit> channels;
};

struct InitResult {
  KernelSpec spec;
  Eigen::VectorXd noise;
  InitReport report;
};

InitResult init_spec(const TimeSeriesSet& ts, Variant variant, std::size_t Q, std::size_t grid_size = 1000,
                     std::uint64_t seed = 0);

struct TrainingConfig {
  Variant variant = Variant::mosm;
  std::size_t Q = 3;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  int max_iterations = 5000;
  std::size_t grid_size = 1000;
  double lognormal_std = 0.25;
  double additive_std = 0.1;
  bool gradient_check = true;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct TrialResult {
  std::uint64_t seed = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  GPModel model;
  bool converged = false;
  int iterations = 0;
  std::string message;
  double lognormal_std = 0.0;
  double additive_std = 0.0;
};

struct FitResult {
  InitReport init;
  std::vector<TrialResult> trials;  // ascending final objective
  std::vector<std::string> failures;
};

struct GradientCheck {
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
  double max_relative_error = 0.0;
};

/// Central differences of the MAP objective on the unconstrained scale.
/// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-6 max(1, |f|)).
GradientCheck check_gradient(const ParamLayout& layout, const Eigen::VectorXd& x, const TrainingData& data,
                             const Eigen::VectorXd& prior_scales, double step = 1e-5);

/// Box bounds on the unconstrained vector used during fitting.
void fit_bounds(const ParamLayout& layout, double f_max, const Eigen::VectorXd& channel_variance,
                Eigen::VectorXd& lower, Eigen::VectorXd& upper);

/// Random restart around `start` (unconstrained vector) per the trial perturbation rules.
Eigen::VectorXd perturb(const ParamLayout& layout, const Eigen::VectorXd& start, std::uint64_t seed,
                        double lognormal_std, double additive_std, double f_max);

FitResult fit(const TimeSeriesSet& ts, const TrainingConfig& config);

}  // namespace mogp
