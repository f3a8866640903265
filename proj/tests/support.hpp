#pragma once

// Shared generators for randomized tests.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "mogp/gp.hpp"
#include "mogp/kernels.hpp"
#include "mogp/rng.hpp"
#include "mogp/series.hpp"

namespace mogp::test {

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Random valid spec honoring the variant's ties. Frequencies stay low
/// relative to the time span used by `random_inputs`.
inline KernelSpec random_spec(Variant v, std::size_t M, std::size_t Q, std::size_t N, Rng& rng) {
  std::vector<SpectralComponent> comps;
  for (std::size_t q = 0; q < Q; ++q) {
    auto c = SpectralComponent::zeros(M, N);
    for (std::size_t i = 0; i < M; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      c.weight(ii) = signed_weights(v) ? uniform(rng, -1.5, 1.5) : uniform(rng, 0.1, 1.5);
      for (std::size_t d = 0; d < N; ++d) {
        const auto dd = static_cast<Eigen::Index>(d);
        c.mean(ii, dd) = uniform(rng, 0.0, 0.4);
        c.scale(ii, dd) = std::exp(uniform(rng, std::log(0.01), std::log(2.0)));
        if (has_delay(v)) c.delay(ii, dd) = uniform(rng, -3.0, 3.0);
      }
      if (has_phase(v)) c.phase(ii) = uniform(rng, -std::numbers::pi, std::numbers::pi);
    }
    if (shares_spectrum(v))
      for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(M); ++i) {
        c.mean.row(i) = c.mean.row(0);
        c.scale.row(i) = c.scale.row(0);
      }
    comps.push_back(std::move(c));
  }
  return KernelSpec(v, M, N, std::move(comps));
}

inline InputSet random_inputs(std::size_t n, std::size_t M, std::size_t N, Rng& rng, double span = 20.0) {
  InputSet s;
  s.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N));
  for (std::size_t r = 0; r < n; ++r) {
    s.channel.push_back(static_cast<std::size_t>(rng.below(M)));
    for (std::size_t d = 0; d < N; ++d) s.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = uniform(rng, 0.0, span);
  }
  return s;
}

/// Training data drawn from the noisy GP prior of `spec`.
inline TrainingData sample_data(const KernelSpec& spec, const Eigen::VectorXd& noise, const InputSet& inputs,
                                Rng& rng) {
  Eigen::MatrixXd K = gram(spec, inputs, noise);
  K.diagonal().array() += 1e-9 * K.diagonal().mean();
  Eigen::MatrixXd L = K.llt().matrixL();
  Eigen::VectorXd z(K.rows());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
  return {inputs, L * z};
}

inline double min_eigenvalue(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mogp-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace mogp::test
