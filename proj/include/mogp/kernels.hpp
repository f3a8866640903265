#pragma once

// Spectral mixture kernels for multi-output GPs.
//
// Every variant shares one per-channel parametrization. For component q and
// channel i we store a weight w_i, a frequency mean mu_i (cycles/day), a
// diagonal frequency scale Sigma_i ((rad/day)^2), a delay theta_i (days) and
// a phase phi_i (rad). Cross-channel parameters are derived from these:
//
//   MOSM   alpha_ij = w_i w_j (2pi)^(N/2) |Sigma_ij|^(1/2)
//                     * exp(-1/4 (m_i-m_j)^T (Sigma_i+Sigma_j)^-1 (m_i-m_j))
//          Sigma_ij = 2 Sigma_i (Sigma_i+Sigma_j)^-1 Sigma_j
//          m_ij     = (Sigma_i+Sigma_j)^-1 (Sigma_i m_j + Sigma_j m_i)
//          theta_ij = theta_i - theta_j,  phi_ij = phi_i - phi_j
//   CSM    alpha_ij = sqrt(w_i w_j), shared mu/Sigma, theta = 0, phi_ij = phi_i - phi_j
//   SM-LMC alpha_ij = a_i a_j (a_i may be negative), shared mu/Sigma, theta = phi = 0
//   SM-IGP alpha_ij = w_i delta_ij, shared mu/Sigma, theta = phi = 0
//
// where m = 2 pi mu is the angular frequency. The kernel is then
//
//   k_ij(tau) = sum_q alpha_ij exp(-1/2 u^T Sigma_ij u) cos(u^T m_ij + phi_ij),
//   u = tau + theta_ij.

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace mogp {

enum class Variant { mosm, csm, smlmc, smigp };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

/// True when mu and Sigma are tied across channels.
constexpr bool shares_spectrum(Variant v) { return v != Variant::mosm; }
constexpr bool has_delay(Variant v) { return v == Variant::mosm; }
constexpr bool has_phase(Variant v) { return v == Variant::mosm || v == Variant::csm; }
constexpr bool signed_weights(Variant v) { return v == Variant::smlmc; }

/// One mixture component across all channels. Matrices are M x N.
struct SpectralComponent {
  Eigen::VectorXd weight;  // M
  Eigen::MatrixXd mean;    // cycles/day
  Eigen::MatrixXd scale;   // diagonal of Sigma, (rad/day)^2
  Eigen::MatrixXd delay;   // days
  Eigen::VectorXd phase;   // M, radians

  static SpectralComponent zeros(std::size_t M, std::size_t N);
};

class KernelSpec {
 public:
  KernelSpec() = default;
  KernelSpec(Variant variant, std::size_t M, std::size_t N, std::vector<SpectralComponent> components);

  Variant variant() const { return variant_; }
  std::size_t Q() const { return components_.size(); }
  std::size_t M() const { return M_; }
  std::size_t N() const { return N_; }
  const std::vector<SpectralComponent>& components() const { return components_; }
  const SpectralComponent& component(std::size_t q) const { return components_.at(q); }

  /// Throws InvalidParameter when a field or a variant tie is violated.
  void validate() const;

  bool operator==(const KernelSpec& other) const;

 private:
  Variant variant_ = Variant::mosm;
  std::size_t M_ = 0;
  std::size_t N_ = 1;
  std::vector<SpectralComponent> components_;
};

struct CrossParams {
  double alpha = 0.0;
  Eigen::VectorXd mean;   // cycles/day
  Eigen::VectorXd scale;  // (rad/day)^2
  Eigen::VectorXd delay;
  double phase = 0.0;
};

CrossParams cross_params(const KernelSpec& spec, std::size_t q, std::size_t i, std::size_t j);

/// k_ij(tau); tau has N entries.
double kernel_eval(const KernelSpec& spec, std::size_t i, std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& tau);
double kernel_eval(const KernelSpec& spec, std::size_t i, std::size_t j, double tau);

/// Points where the multi-output kernel is evaluated: a channel index and an
/// N-dimensional input (row of x).
struct InputSet {
  std::vector<std::size_t> channel;
  Eigen::MatrixXd x;  // rows are points

  std::size_t size() const { return channel.size(); }
  static InputSet time_points(std::vector<std::size_t> channel, const std::vector<double>& t);
};

/// Cross parameters for every (q, i, j), flattened for fast Gram assembly.
class CrossTable {
 public:
  explicit CrossTable(const KernelSpec& spec);
  const CrossParams& at(std::size_t q, std::size_t i, std::size_t j) const {
    return table_[(q * M_ + i) * M_ + j];
  }
  std::size_t Q() const { return Q_; }
  std::size_t M() const { return M_; }

  double eval(std::size_t i, std::size_t j, const double* tau, std::size_t N) const;

 private:
  std::size_t Q_, M_;
  std::vector<CrossParams> table_;
};

/// Noiseless kernel matrix between two input sets.
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const InputSet& a, const InputSet& b);

/// Symmetric Gram matrix with per-channel noise on the diagonal.
Eigen::MatrixXd gram(const KernelSpec& spec, const InputSet& inputs, const Eigen::VectorXd& noise);

/// Restricts a spec to a more constrained variant, tying spectra to channel 0
/// and mapping amplitudes so that already-tied specs keep the same Gram matrix.
KernelSpec constrain(const KernelSpec& spec, Variant target);

}  // namespace mogp
