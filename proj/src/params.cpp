#include "mogp/params.hpp"

#include <cmath>

#include "mogp/error.hpp"

namespace mogp {

ParamLayout::ParamLayout(Variant variant, std::size_t Q, std::size_t M, std::size_t N)
    : variant_(variant), Q_(Q), M_(M), N_(N), shared_(shares_spectrum(variant)) {
  if (Q == 0 || M == 0 || N == 0) throw InvalidParameter("parameter layout: Q, M and N must be positive");
  std::size_t spectral = shared_ ? N : M * N;
  mean_off_ = M;
  scale_off_ = mean_off_ + spectral;
  std::size_t next = scale_off_ + spectral;
  delay_off_ = npos;
  phase_off_ = npos;
  if (has_delay(variant)) {
    delay_off_ = next;
    next += M * N;
  }
  if (has_phase(variant)) {
    phase_off_ = next;
    next += M;
  }
  per_component_ = next;
}

std::vector<ParamKind> ParamLayout::kinds() const {
  std::vector<ParamKind> k(size());
  for (std::size_t q = 0; q < Q_; ++q) {
    for (std::size_t i = 0; i < M_; ++i) {
      k[weight(q, i)] = signed_weights(variant_) ? ParamKind::signed_weight : ParamKind::log_weight;
      for (std::size_t d = 0; d < N_; ++d) {
        k[mean(q, i, d)] = ParamKind::frequency;
        k[scale(q, i, d)] = ParamKind::log_scale;
        if (delay_off_ != npos) k[delay(q, i, d)] = ParamKind::delay;
      }
      if (phase_off_ != npos) k[phase(q, i)] = ParamKind::phase;
    }
  }
  for (std::size_t i = 0; i < M_; ++i) k[noise(i)] = ParamKind::log_noise;
  return k;
}

Eigen::VectorXd to_unconstrained(const KernelSpec& spec, const Eigen::VectorXd& noise) {
  spec.validate();
  ParamLayout L = ParamLayout::of(spec);
  if (static_cast<std::size_t>(noise.size()) != L.M()) throw InvalidParameter("to_unconstrained: noise length != M");
  if (!(noise.array() > 0.0).all()) throw InvalidParameter("to_unconstrained: noise must be positive");
  const bool log_w = !signed_weights(spec.variant());
  Eigen::VectorXd x(L.size());
  for (std::size_t q = 0; q < L.Q(); ++q) {
    const auto& c = spec.component(q);
    for (std::size_t i = 0; i < L.M(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (log_w && !(c.weight(ii) > 0.0)) throw InvalidParameter("to_unconstrained: weight must be positive");
      x(L.weight(q, i)) = log_w ? std::log(c.weight(ii)) : c.weight(ii);
      for (std::size_t d = 0; d < L.N(); ++d) {
        const auto dd = static_cast<Eigen::Index>(d);
        x(L.mean(q, i, d)) = c.mean(ii, dd);
        x(L.scale(q, i, d)) = std::log(c.scale(ii, dd));
        if (L.delay(q, i, d) != ParamLayout::npos) x(L.delay(q, i, d)) = c.delay(ii, dd);
      }
      if (L.phase(q, i) != ParamLayout::npos) x(L.phase(q, i)) = c.phase(ii);
    }
  }
  for (std::size_t i = 0; i < L.M(); ++i) x(L.noise(i)) = std::log(noise(static_cast<Eigen::Index>(i)));
  return x;
}

std::pair<KernelSpec, Eigen::VectorXd> from_unconstrained(const ParamLayout& L, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != L.size()) throw InvalidParameter("from_unconstrained: vector length mismatch");
  if (!x.allFinite()) throw InvalidParameter("from_unconstrained: non-finite parameter vector");
  const bool log_w = !signed_weights(L.variant());
  std::vector<SpectralComponent> comps;
  for (std::size_t q = 0; q < L.Q(); ++q) {
    auto c = SpectralComponent::zeros(L.M(), L.N());
    for (std::size_t i = 0; i < L.M(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double w = x(L.weight(q, i));
      c.weight(ii) = log_w ? std::exp(w) : w;
      for (std::size_t d = 0; d < L.N(); ++d) {
        const auto dd = static_cast<Eigen::Index>(d);
        c.mean(ii, dd) = x(L.mean(q, i, d));
        c.scale(ii, dd) = std::exp(x(L.scale(q, i, d)));
        if (L.delay(q, i, d) != ParamLayout::npos) c.delay(ii, dd) = x(L.delay(q, i, d));
      }
      if (L.phase(q, i) != ParamLayout::npos) c.phase(ii) = x(L.phase(q, i));
    }
    comps.push_back(std::move(c));
  }
  Eigen::VectorXd noise(L.M());
  for (std::size_t i = 0; i < L.M(); ++i) noise(static_cast<Eigen::Index>(i)) = std::exp(x(L.noise(i)));
  return {KernelSpec(L.variant(), L.M(), L.N(), std::move(comps)), noise};
}

}  // namespace mogp
