#pragma once

// Flat unconstrained parameter vector for optimization.
//
// Positive quantities (non-LMC weights, frequency scales, noise variances)
// are stored as logarithms. Delays, phases, SM-LMC coefficients and frequency
// means are stored as-is; means are kept nonnegative by optimizer bounds.
// Tied parameters of the constrained variants occupy a single coordinate.

#include <Eigen/Core>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "mogp/kernels.hpp"

namespace mogp {

enum class ParamKind { log_weight, signed_weight, frequency, log_scale, delay, phase, log_noise };

class ParamLayout {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  ParamLayout(Variant variant, std::size_t Q, std::size_t M, std::size_t N);
  static ParamLayout of(const KernelSpec& spec) { return {spec.variant(), spec.Q(), spec.M(), spec.N()}; }

  Variant variant() const { return variant_; }
  std::size_t Q() const { return Q_; }
  std::size_t M() const { return M_; }
  std::size_t N() const { return N_; }
  std::size_t size() const { return per_component_ * Q_ + M_; }

  std::size_t weight(std::size_t q, std::size_t i) const { return q * per_component_ + i; }
  std::size_t mean(std::size_t q, std::size_t i, std::size_t d) const {
    return q * per_component_ + mean_off_ + (shared_ ? d : i * N_ + d);
  }
  std::size_t scale(std::size_t q, std::size_t i, std::size_t d) const {
    return q * per_component_ + scale_off_ + (shared_ ? d : i * N_ + d);
  }
  std::size_t delay(std::size_t q, std::size_t i, std::size_t d) const {
    return delay_off_ == npos ? npos : q * per_component_ + delay_off_ + i * N_ + d;
  }
  std::size_t phase(std::size_t q, std::size_t i) const {
    return phase_off_ == npos ? npos : q * per_component_ + phase_off_ + i;
  }
  std::size_t noise(std::size_t i) const { return per_component_ * Q_ + i; }

  std::vector<ParamKind> kinds() const;

 private:
  Variant variant_;
  std::size_t Q_, M_, N_;
  bool shared_;
  std::size_t mean_off_, scale_off_, delay_off_, phase_off_, per_component_;
};

Eigen::VectorXd to_unconstrained(const KernelSpec& spec, const Eigen::VectorXd& noise);
std::pair<KernelSpec, Eigen::VectorXd> from_unconstrained(const ParamLayout& layout, const Eigen::VectorXd& x);

}  // namespace mogp
