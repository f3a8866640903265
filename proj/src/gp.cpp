#include "mogp/gp.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "mogp/error.hpp"

namespace mogp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kLogTwoPi = std::log(kTwoPi);

TrainingData collect(const TimeSeriesSet& ts, const std::vector<IndexSet>& mask) {
  std::vector<std::size_t> channel;
  std::vector<double> t, y;
  for (std::size_t c = 0; c < ts.num_channels(); ++c) {
    for (auto k : mask.at(c)) {
      channel.push_back(c);
      t.push_back(ts.channels[c].observations.at(k).t);
      y.push_back(ts.channels[c].observations[k].y);
    }
  }
  TrainingData d;
  d.inputs = InputSet::time_points(std::move(channel), t);
  d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return d;
}

void check_data(const KernelSpec& spec, const Eigen::VectorXd& noise, const TrainingData& data) {
  if (static_cast<std::size_t>(noise.size()) != spec.M()) throw InvalidParameter("noise length != M");
  if (data.y.size() != static_cast<Eigen::Index>(data.size())) throw InvalidParameter("targets length != inputs");
}

}  // namespace

TrainingData training_data(const TimeSeriesSet& ts) { return collect(ts, ts.train_mask); }
TrainingData test_data(const TimeSeriesSet& ts) { return collect(ts, ts.test_mask); }

Eigen::VectorXd prior_scales(const TimeSeriesSet& ts) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ts.num_channels()));
  for (std::size_t c = 0; c < ts.num_channels(); ++c)
    for (auto k : ts.train_mask[c])
      s(static_cast<Eigen::Index>(c)) = std::max(s(static_cast<Eigen::Index>(c)), std::abs(ts.channels[c].observations[k].y));
  return s;
}

Factorization factorize(const Eigen::MatrixXd& K) {
  Factorization f;
  f.llt.compute(K);
  if (f.llt.info() == Eigen::Success) return f;

  const double scale = K.rows() > 0 ? std::max(K.diagonal().cwiseAbs().mean(), 1e-300) : 1.0;
  Eigen::MatrixXd Kj = K;
  for (double rel = 1e-8; rel <= 1e-2 * (1.0 + 1e-9); rel *= 10.0) {
    f.jitter = rel * scale;
    Kj.diagonal() = K.diagonal().array() + f.jitter;
    f.llt.compute(Kj);
    if (f.llt.info() == Eigen::Success) return f;
  }
  throw IllConditionedError("kernel matrix not positive definite even with jitter " + std::to_string(f.jitter),
                            f.jitter);
}

namespace {

struct Solved {
  Factorization f;
  Eigen::VectorXd alpha;
  double nll;
};

Solved solve(const KernelSpec& spec, const Eigen::VectorXd& noise, const TrainingData& data) {
  if (data.size() == 0) throw DataError("nll: training set is empty");
  Eigen::MatrixXd K = gram(spec, data.inputs, noise);
  Solved s{factorize(K), {}, 0.0};
  s.alpha = s.f.llt.solve(data.y);
  const auto& L = s.f.llt.matrixLLT();
  double log_det = 2.0 * L.diagonal().array().log().sum();
  s.nll = 0.5 * data.y.dot(s.alpha) + 0.5 * log_det + 0.5 * static_cast<double>(data.size()) * kLogTwoPi;
  return s;
}

}  // namespace

double nll(const KernelSpec& spec, const Eigen::VectorXd& noise, const TrainingData& data) {
  check_data(spec, noise, data);
  return solve(spec, noise, data).nll;
}

double nll(const GPModel& model, const TimeSeriesSet& ts) { return nll(model.spec, model.noise, training_data(ts)); }

double magnitude_penalty(const KernelSpec& spec, const Eigen::VectorXd& s) {
  if (static_cast<std::size_t>(s.size()) != spec.M()) throw InvalidParameter("prior scales length != M");
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (!(s(i) > 0.0))
      throw DataError("degenerate magnitude prior: channel " + std::to_string(i) + " has zero prior scale");
  double p = 0.0;
  for (const auto& c : spec.components()) p += 0.5 * (c.weight.array() / s.array()).square().sum();
  return p;
}

double map_objective(const GPModel& model, const TimeSeriesSet& ts) {
  return nll(model, ts) + magnitude_penalty(model.spec, prior_scales(ts));
}

namespace {

// Weighted sums of dk/d(cross parameter) over all Gram entries of one (q, i, j).
struct CrossGrad {
  double alpha = 0.0;
  Eigen::VectorXd scale, mean, lag;  // mean is per angular frequency
  double phase = 0.0;
};

}  // namespace

ObjectiveValue map_objective_with_gradient(const ParamLayout& L, const Eigen::VectorXd& x,
                                           const TrainingData& data, const Eigen::VectorXd& prior) {
  auto [spec, noise] = from_unconstrained(L, x);
  check_data(spec, noise, data);

  Solved s = solve(spec, noise, data);
  ObjectiveValue out;
  out.nll = s.nll;
  out.jitter = s.f.jitter;
  out.value = s.nll + magnitude_penalty(spec, prior);

  const auto n = static_cast<Eigen::Index>(data.size());
  // dNLL/dp = 1/2 sum_ab (K^-1 - a a^T)_ab dK_ab/dp
  Eigen::MatrixXd W = s.f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  W.noalias() -= s.alpha * s.alpha.transpose();
  W *= 0.5;

  const std::size_t Q = L.Q(), M = L.M(), N = L.N();
  const auto Ni = static_cast<Eigen::Index>(N);
  CrossTable table(spec);
  std::vector<CrossGrad> acc(Q * M * M);
  for (auto& g : acc) {
    g.scale = Eigen::VectorXd::Zero(Ni);
    g.mean = Eigen::VectorXd::Zero(Ni);
    g.lag = Eigen::VectorXd::Zero(Ni);
  }

  std::vector<double> u(N), m(N);
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t ca = data.inputs.channel[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b <= a; ++b) {
      const std::size_t cb = data.inputs.channel[static_cast<std::size_t>(b)];
      const double w = (a == b ? 1.0 : 2.0) * W(a, b);
      for (std::size_t q = 0; q < Q; ++q) {
        const CrossParams& cp = table.at(q, ca, cb);
        if (cp.alpha == 0.0 && spec.variant() == Variant::smigp) continue;
        double quad = 0.0, arg = cp.phase;
        for (std::size_t d = 0; d < N; ++d) {
          const auto dd = static_cast<Eigen::Index>(d);
          u[d] = data.inputs.x(a, dd) - data.inputs.x(b, dd) + cp.delay(dd);
          m[d] = kTwoPi * cp.mean(dd);
          quad += cp.scale(dd) * u[d] * u[d];
          arg += m[d] * u[d];
        }
        const double E = std::exp(-0.5 * quad);
        const double C = std::cos(arg), S = std::sin(arg);
        const double aE = cp.alpha * E;
        CrossGrad& g = acc[(q * M + ca) * M + cb];
        g.alpha += w * E * C;
        g.phase -= w * aE * S;
        for (std::size_t d = 0; d < N; ++d) {
          const auto dd = static_cast<Eigen::Index>(d);
          g.scale(dd) -= w * 0.5 * u[d] * u[d] * aE * C;
          g.mean(dd) -= w * aE * S * u[d];
          g.lag(dd) -= w * aE * (cp.scale(dd) * u[d] * C + S * m[d]);
        }
      }
    }
  }

  Eigen::VectorXd& grad = out.gradient;
  grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.size()));
  auto G = [&](std::size_t idx) -> double& { return grad(static_cast<Eigen::Index>(idx)); };

  for (std::size_t q = 0; q < Q; ++q) {
    const auto& c = spec.component(q);
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < M; ++j) {
        const CrossGrad& g = acc[(q * M + i) * M + j];
        const CrossParams& cp = table.at(q, i, j);
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);

        if (L.phase(q, i) != ParamLayout::npos) {
          G(L.phase(q, i)) += g.phase;
          G(L.phase(q, j)) -= g.phase;
        }

        switch (spec.variant()) {
          case Variant::mosm: {
            G(L.weight(q, i)) += cp.alpha * g.alpha;
            G(L.weight(q, j)) += cp.alpha * g.alpha;
            for (std::size_t d = 0; d < N; ++d) {
              const auto dd = static_cast<Eigen::Index>(d);
              G(L.delay(q, i, d)) += g.lag(dd);
              G(L.delay(q, j, d)) -= g.lag(dd);
              const double si = c.scale(ii, dd), sj = c.scale(jj, dd), p = si + sj, p2 = p * p;
              const double mi = kTwoPi * c.mean(ii, dd), mj = kTwoPi * c.mean(jj, dd), delta = mi - mj;
              const double shared = delta * delta / (4.0 * p2);
              const double d_si = g.alpha * cp.alpha * (sj / (2.0 * si * p) + shared) +
                                  g.scale(dd) * 2.0 * sj * sj / p2 + g.mean(dd) * sj * (mj - mi) / p2;
              const double d_sj = g.alpha * cp.alpha * (si / (2.0 * sj * p) + shared) +
                                  g.scale(dd) * 2.0 * si * si / p2 + g.mean(dd) * si * (mi - mj) / p2;
              G(L.scale(q, i, d)) += d_si * si;
              G(L.scale(q, j, d)) += d_sj * sj;
              const double d_mi = -g.alpha * cp.alpha * 0.5 * delta / p + g.mean(dd) * sj / p;
              const double d_mj = g.alpha * cp.alpha * 0.5 * delta / p + g.mean(dd) * si / p;
              G(L.mean(q, i, d)) += kTwoPi * d_mi;
              G(L.mean(q, j, d)) += kTwoPi * d_mj;
            }
            break;
          }
          case Variant::csm:
            G(L.weight(q, i)) += 0.5 * cp.alpha * g.alpha;
            G(L.weight(q, j)) += 0.5 * cp.alpha * g.alpha;
            break;
          case Variant::smlmc:
            G(L.weight(q, i)) += c.weight(jj) * g.alpha;
            G(L.weight(q, j)) += c.weight(ii) * g.alpha;
            break;
          case Variant::smigp:
            if (i == j) G(L.weight(q, i)) += cp.alpha * g.alpha;
            break;
        }

        if (shares_spectrum(spec.variant())) {
          for (std::size_t d = 0; d < N; ++d) {
            const auto dd = static_cast<Eigen::Index>(d);
            G(L.scale(q, 0, d)) += g.scale(dd) * cp.scale(dd);
            G(L.mean(q, 0, d)) += kTwoPi * g.mean(dd);
          }
        }
      }
    }
  }

  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t c = data.inputs.channel[static_cast<std::size_t>(a)];
    G(L.noise(c)) += W(a, a) * noise(static_cast<Eigen::Index>(c));
  }

  // Magnitude prior.
  for (std::size_t q = 0; q < Q; ++q) {
    const auto& c = spec.component(q);
    for (std::size_t i = 0; i < M; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double s2 = prior(ii) * prior(ii);
      const double w = c.weight(ii);
      G(L.weight(q, i)) += signed_weights(spec.variant()) ? w / s2 : w * w / s2;
    }
  }
  return out;
}

Posterior posterior(const KernelSpec& spec, const Eigen::VectorXd& noise, const TrainingData& data,
                    const InputSet& query) {
  check_data(spec, noise, data);
  Posterior p;
  p.query = query;
  const auto nq = static_cast<Eigen::Index>(query.size());
  if (nq > 0 && !query.x.allFinite()) throw InvalidParameter("posterior: non-finite query");

  Eigen::VectorXd prior_var(nq);
  CrossTable table(spec);
  std::vector<double> zero(spec.N(), 0.0);
  for (Eigen::Index r = 0; r < nq; ++r) {
    const std::size_t c = query.channel.at(static_cast<std::size_t>(r));
    if (c >= spec.M()) throw InvalidParameter("posterior: query channel out of range");
    prior_var(r) = table.eval(c, c, zero.data(), spec.N()) + noise(static_cast<Eigen::Index>(c));
  }

  if (data.size() == 0) {
    p.mean = Eigen::VectorXd::Zero(nq);
    p.variance = prior_var;
    return p;
  }

  Solved s = solve(spec, noise, data);
  Eigen::MatrixXd Ks = cross_gram(spec, data.inputs, query);  // n x nq
  p.mean = Ks.transpose() * s.alpha;
  Eigen::MatrixXd V = s.f.llt.matrixL().solve(Ks);
  p.variance = prior_var - V.colwise().squaredNorm().transpose();
  p.variance = p.variance.cwiseMax(0.0);
  return p;
}

Posterior posterior(const GPModel& model, const TimeSeriesSet& ts, const InputSet& query) {
  return posterior(model.spec, model.noise, training_data(ts), query);
}

double normal_quantile(double p) {
  static const boost::math::normal standard;
  return boost::math::quantile(standard, p);
}

std::vector<Band> confidence_band(const Posterior& p, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  std::vector<Band> out(static_cast<std::size_t>(p.mean.size()));
  for (Eigen::Index r = 0; r < p.mean.size(); ++r) {
    double half = z * std::sqrt(std::max(p.variance(r), 0.0));
    out[static_cast<std::size_t>(r)] = {p.mean(r) - half, p.mean(r) + half};
  }
  return out;
}

}  // namespace mogp
