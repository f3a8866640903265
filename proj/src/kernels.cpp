#include "mogp/kernels.hpp"

#include <cmath>
#include <numbers>

#include "mogp/error.hpp"

namespace mogp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter("kernel spec: " + what);
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::mosm: return "mosm";
    case Variant::csm: return "csm";
    case Variant::smlmc: return "smlmc";
    case Variant::smigp: return "smigp";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "mosm" || name == "MOSM") return Variant::mosm;
  if (name == "csm" || name == "CSM") return Variant::csm;
  if (name == "smlmc" || name == "SM-LMC" || name == "sm-lmc") return Variant::smlmc;
  if (name == "smigp" || name == "SM-IGP" || name == "sm-igp") return Variant::smigp;
  throw ConfigError("unknown kernel variant '" + name + "' (expected mosm|csm|smlmc|smigp)");
}

SpectralComponent SpectralComponent::zeros(std::size_t M, std::size_t N) {
  SpectralComponent c;
  c.weight = Eigen::VectorXd::Zero(M);
  c.mean = Eigen::MatrixXd::Zero(M, N);
  c.scale = Eigen::MatrixXd::Ones(M, N);
  c.delay = Eigen::MatrixXd::Zero(M, N);
  c.phase = Eigen::VectorXd::Zero(M);
  return c;
}

KernelSpec::KernelSpec(Variant variant, std::size_t M, std::size_t N, std::vector<SpectralComponent> components)
    : variant_(variant), M_(M), N_(N), components_(std::move(components)) {
  validate();
}

void KernelSpec::validate() const {
  require(M_ >= 1, "M must be positive");
  require(N_ >= 1, "N must be positive");
  require(!components_.empty(), "Q must be positive");
  const auto M = static_cast<Eigen::Index>(M_);
  const auto N = static_cast<Eigen::Index>(N_);
  for (std::size_t q = 0; q < components_.size(); ++q) {
    const auto& c = components_[q];
    std::string at = " (component " + std::to_string(q) + ")";
    require(c.weight.size() == M && c.phase.size() == M, "weight/phase length != M" + at);
    require(c.mean.rows() == M && c.mean.cols() == N, "mean shape != M x N" + at);
    require(c.scale.rows() == M && c.scale.cols() == N, "scale shape != M x N" + at);
    require(c.delay.rows() == M && c.delay.cols() == N, "delay shape != M x N" + at);
    require(all_finite(c.weight) && all_finite(c.mean) && all_finite(c.scale) && all_finite(c.delay) &&
                all_finite(c.phase),
            "non-finite parameter" + at);
    require((c.scale.array() > 0.0).all(), "frequency scale must be strictly positive" + at);
    require((c.mean.array() >= 0.0).all(), "frequency mean must be nonnegative" + at);
    if (!signed_weights(variant_)) require((c.weight.array() >= 0.0).all(), "weights must be nonnegative" + at);
    if (shares_spectrum(variant_)) {
      for (Eigen::Index i = 1; i < M; ++i) {
        require(c.mean.row(i) == c.mean.row(0), "mean not shared across channels" + at);
        require(c.scale.row(i) == c.scale.row(0), "scale not shared across channels" + at);
      }
    }
    if (!has_delay(variant_)) require(c.delay.isZero(0.0), "delay must be zero for " + to_string(variant_) + at);
    if (!has_phase(variant_)) require(c.phase.isZero(0.0), "phase must be zero for " + to_string(variant_) + at);
  }
}

bool KernelSpec::operator==(const KernelSpec& o) const {
  if (variant_ != o.variant_ || M_ != o.M_ || N_ != o.N_ || components_.size() != o.components_.size())
    return false;
  for (std::size_t q = 0; q < components_.size(); ++q) {
    const auto &a = components_[q], &b = o.components_[q];
    if (a.weight != b.weight || a.mean != b.mean || a.scale != b.scale || a.delay != b.delay || a.phase != b.phase)
      return false;
  }
  return true;
}

CrossParams cross_params(const KernelSpec& spec, std::size_t q, std::size_t i, std::size_t j) {
  if (i >= spec.M() || j >= spec.M() || q >= spec.Q())
    throw InvalidParameter("cross_params: index out of range");
  const auto& c = spec.component(q);
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  const auto N = static_cast<Eigen::Index>(spec.N());
  CrossParams cp;

  if (spec.variant() == Variant::mosm) {
    cp.scale.resize(N);
    cp.mean.resize(N);
    double log_det = 0.0, quad = 0.0;
    for (Eigen::Index d = 0; d < N; ++d) {
      double si = c.scale(ii, d), sj = c.scale(jj, d);
      if (!(si > 0.0) || !(sj > 0.0)) throw InvalidParameter("cross_params: non-positive frequency scale");
      double p = si + sj;
      cp.scale(d) = 2.0 * si * sj / p;
      cp.mean(d) = (si * c.mean(jj, d) + sj * c.mean(ii, d)) / p;
      double dm = kTwoPi * (c.mean(ii, d) - c.mean(jj, d));
      log_det += std::log(cp.scale(d));
      quad += dm * dm / p;
    }
    cp.alpha = c.weight(ii) * c.weight(jj) * std::pow(kTwoPi, 0.5 * static_cast<double>(N)) *
               std::exp(0.5 * log_det - 0.25 * quad);
    cp.delay = c.delay.row(ii).transpose() - c.delay.row(jj).transpose();
    cp.phase = c.phase(ii) - c.phase(jj);
    return cp;
  }

  // Tied spectra: channel 0 holds the shared values.
  cp.mean = c.mean.row(0).transpose();
  cp.scale = c.scale.row(0).transpose();
  if ((cp.scale.array() <= 0.0).any()) throw InvalidParameter("cross_params: non-positive frequency scale");
  cp.delay = Eigen::VectorXd::Zero(N);
  switch (spec.variant()) {
    case Variant::csm:
      cp.alpha = std::sqrt(c.weight(ii) * c.weight(jj));
      cp.phase = c.phase(ii) - c.phase(jj);
      break;
    case Variant::smlmc:
      cp.alpha = c.weight(ii) * c.weight(jj);
      break;
    case Variant::smigp:
      cp.alpha = i == j ? c.weight(ii) : 0.0;
      break;
    case Variant::mosm:
      break;
  }
  return cp;
}

CrossTable::CrossTable(const KernelSpec& spec) : Q_(spec.Q()), M_(spec.M()) {
  table_.reserve(Q_ * M_ * M_);
  for (std::size_t q = 0; q < Q_; ++q)
    for (std::size_t i = 0; i < M_; ++i)
      for (std::size_t j = 0; j < M_; ++j) table_.push_back(cross_params(spec, q, i, j));
}

double CrossTable::eval(std::size_t i, std::size_t j, const double* tau, std::size_t N) const {
  double k = 0.0;
  for (std::size_t q = 0; q < Q_; ++q) {
    const auto& cp = at(q, i, j);
    if (cp.alpha == 0.0) continue;
    double quad = 0.0, arg = cp.phase;
    for (std::size_t d = 0; d < N; ++d) {
      const auto dd = static_cast<Eigen::Index>(d);
      double u = tau[d] + cp.delay(dd);
      quad += cp.scale(dd) * u * u;
      arg += kTwoPi * cp.mean(dd) * u;
    }
    k += cp.alpha * std::exp(-0.5 * quad) * std::cos(arg);
  }
  return k;
}

double kernel_eval(const KernelSpec& spec, std::size_t i, std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& tau) {
  if (static_cast<std::size_t>(tau.size()) != spec.N()) throw InvalidParameter("kernel_eval: lag dimension != N");
  if (!tau.allFinite()) throw InvalidParameter("kernel_eval: non-finite lag");
  CrossTable table(spec);
  Eigen::VectorXd t = tau;
  return table.eval(i, j, t.data(), spec.N());
}

double kernel_eval(const KernelSpec& spec, std::size_t i, std::size_t j, double tau) {
  Eigen::VectorXd t(1);
  t(0) = tau;
  return kernel_eval(spec, i, j, t);
}

InputSet InputSet::time_points(std::vector<std::size_t> channel, const std::vector<double>& t) {
  if (channel.size() != t.size()) throw InvalidParameter("input set: channel/time length mismatch");
  InputSet in;
  in.channel = std::move(channel);
  in.x = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  return in;
}

namespace {

void check_inputs(const KernelSpec& spec, const InputSet& in) {
  if (in.x.rows() != static_cast<Eigen::Index>(in.channel.size()))
    throw InvalidParameter("input set: row count != channel count");
  if (in.size() > 0 && static_cast<std::size_t>(in.x.cols()) != spec.N())
    throw InvalidParameter("input set: input dimension != N");
  for (auto c : in.channel)
    if (c >= spec.M()) throw InvalidParameter("input set: channel index out of range");
}

}  // namespace

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const InputSet& a, const InputSet& b) {
  check_inputs(spec, a);
  check_inputs(spec, b);
  CrossTable table(spec);
  const std::size_t N = spec.N();
  Eigen::MatrixXd K(a.size(), b.size());
  std::vector<double> tau(N);
  for (Eigen::Index r = 0; r < K.rows(); ++r)
    for (Eigen::Index c = 0; c < K.cols(); ++c) {
      for (std::size_t d = 0; d < N; ++d) {
        const auto dd = static_cast<Eigen::Index>(d);
        tau[d] = a.x(r, dd) - b.x(c, dd);
      }
      K(r, c) = table.eval(a.channel[r], b.channel[c], tau.data(), N);
    }
  return K;
}

Eigen::MatrixXd gram(const KernelSpec& spec, const InputSet& inputs, const Eigen::VectorXd& noise) {
  check_inputs(spec, inputs);
  if (static_cast<std::size_t>(noise.size()) != spec.M()) throw InvalidParameter("gram: noise length != M");
  if ((noise.array() < 0.0).any()) throw InvalidParameter("gram: negative noise variance");
  CrossTable table(spec);
  const std::size_t N = spec.N();
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd K(n, n);
  std::vector<double> tau(N);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      for (std::size_t d = 0; d < N; ++d) {
        const auto dd = static_cast<Eigen::Index>(d);
        tau[d] = inputs.x(a, dd) - inputs.x(b, dd);
      }
      double k = table.eval(inputs.channel[a], inputs.channel[b], tau.data(), N);
      K(a, b) = k;
      K(b, a) = k;
    }
    K(a, a) += noise(static_cast<Eigen::Index>(inputs.channel[a]));
  }
  return K;
}

namespace {

int restriction_rank(Variant v) {
  switch (v) {
    case Variant::mosm: return 0;
    case Variant::csm: return 1;
    case Variant::smlmc: return 2;
    case Variant::smigp: return 3;
  }
  return 0;
}

}  // namespace

KernelSpec constrain(const KernelSpec& spec, Variant target) {
  if (target == spec.variant()) return spec;
  if (restriction_rank(target) < restriction_rank(spec.variant()))
    throw ConfigError("unsupported constraint: " + to_string(spec.variant()) + " cannot be restricted to " +
                      to_string(target));
  const auto M = static_cast<Eigen::Index>(spec.M());
  const double root_two_pi_n = std::pow(kTwoPi, 0.5 * static_cast<double>(spec.N()));

  std::vector<SpectralComponent> out;
  for (const auto& c : spec.components()) {
    SpectralComponent t = c;
    for (Eigen::Index i = 0; i < M; ++i) {
      t.mean.row(i) = c.mean.row(0);
      t.scale.row(i) = c.scale.row(0);
    }
    t.delay.setZero();
    if (!has_phase(target)) t.phase.setZero();

    // Diagonal amplitude alpha_ii under the tied spectrum.
    Eigen::VectorXd diag(M);
    for (Eigen::Index i = 0; i < M; ++i) {
      double w = c.weight(i);
      switch (spec.variant()) {
        case Variant::mosm: diag(i) = w * w * root_two_pi_n * std::sqrt(c.scale.row(0).prod()); break;
        case Variant::smlmc: diag(i) = w * w; break;
        default: diag(i) = w; break;
      }
    }
    t.weight = target == Variant::smlmc ? Eigen::VectorXd(diag.cwiseSqrt()) : diag;
    out.push_back(std::move(t));
  }
  return KernelSpec(target, spec.M(), spec.N(), std::move(out));
}

}  // namespace mogp
