#include "mogp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <numeric>
#include <thread>

#include "mogp/error.hpp"
#include "mogp/optimize.hpp"
#include "mogp/params.hpp"
#include "mogp/rng.hpp"

namespace mogp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kHwhmToSigma = 1.0 / std::sqrt(2.0 * std::log(2.0));

std::vector<double> train_times(const Channel& ch, std::span<const std::size_t> idx) {
  std::vector<double> t;
  t.reserve(idx.size());
  for (auto k : idx) t.push_back(ch.observations.at(k).t);
  return t;
}

double variance_of(const Channel& ch, std::span<const std::size_t> idx) {
  if (idx.empty()) return 0.0;
  double mean = 0.0;
  for (auto k : idx) mean += ch.observations[k].y;
  mean /= static_cast<double>(idx.size());
  double v = 0.0;
  for (auto k : idx) v += (ch.observations[k].y - mean) * (ch.observations[k].y - mean);
  return v / static_cast<double>(idx.size());
}

}  // namespace

double nyquist_estimate(std::span<const double> t) {
  if (t.size() < 2) throw DataError("nyquist estimate needs at least 2 timestamps");
  std::vector<double> gaps;
  for (std::size_t k = 1; k < t.size(); ++k) gaps.push_back(t[k] - t[k - 1]);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  double med = gaps[gaps.size() / 2];
  if (gaps.size() % 2 == 0) {
    double lo = *std::max_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2));
    med = 0.5 * (med + lo);
  }
  if (!(med > 0.0)) throw DataError("nyquist estimate: non-increasing timestamps");
  return 0.5 / med;
}

Psd estimate_psd(const Channel& ch, std::span<const std::size_t> idx, std::size_t grid_size, double f_max) {
  if (idx.size() < 4)
    throw DataError("periodogram: channel '" + ch.name + "' has fewer than 4 training observations");
  if (grid_size == 0 || !(f_max > 0.0)) throw ConfigError("periodogram: grid size and f_max must be positive");

  std::vector<double> t, y;
  for (auto k : idx) {
    t.push_back(ch.observations.at(k).t);
    y.push_back(ch.observations[k].y);
  }
  double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  for (auto& v : y) v -= mean;
  const double tiny = 1e-12 * static_cast<double>(t.size());

  Psd psd;
  psd.frequency.resize(grid_size);
  psd.power.resize(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g) {
    double f = f_max * static_cast<double>(g + 1) / static_cast<double>(grid_size);
    double w = kTwoPi * f;
    double s2 = 0.0, c2 = 0.0;
    for (double tk : t) {
      s2 += std::sin(2.0 * w * tk);
      c2 += std::cos(2.0 * w * tk);
    }
    double shift = std::atan2(s2, c2) / (2.0 * w);
    double yc = 0.0, ys = 0.0, cc = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      double a = w * (t[k] - shift);
      double c = std::cos(a), s = std::sin(a);
      yc += y[k] * c;
      ys += y[k] * s;
      cc += c * c;
      ss += s * s;
    }
    double p = 0.0;
    if (cc > tiny) p += yc * yc / cc;
    if (ss > tiny) p += ys * ys / ss;
    psd.frequency[g] = f;
    psd.power[g] = 0.5 * p;
  }
  return psd;
}

Psd estimate_psd(const Channel& ch, std::size_t grid_size) {
  IndexSet all(ch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto t = train_times(ch, all);
  return estimate_psd(ch, all, grid_size, nyquist_estimate(t));
}

namespace {

double half_width_at(const Psd& psd, std::size_t cell) {
  const auto& P = psd.power;
  const double half = 0.5 * P[cell];
  const double df = psd.frequency.size() > 1 ? psd.frequency[1] - psd.frequency[0] : psd.frequency[0];
  double left = -1.0, right = -1.0;
  for (std::size_t k = cell; k-- > 0;) {
    if (P[k] <= half) {
      double frac = (P[k + 1] - half) / (P[k + 1] - P[k]);
      left = psd.frequency[k + 1] - frac * df;
      break;
    }
  }
  for (std::size_t k = cell + 1; k < P.size(); ++k) {
    if (P[k] <= half) {
      double frac = (P[k - 1] - half) / (P[k - 1] - P[k]);
      right = psd.frequency[k - 1] + frac * df;
      break;
    }
  }
  const double f = psd.frequency[cell];
  double hw;
  if (left >= 0.0 && right >= 0.0)
    hw = 0.5 * (right - left);
  else if (left >= 0.0)
    hw = f - left;
  else if (right >= 0.0)
    hw = right - f;
  else
    return 0.0;
  return std::max(hw, 0.5 * df);
}

}  // namespace

std::vector<Peak> pick_peaks(const Psd& psd, std::size_t count) {
  const auto& P = psd.power;
  std::vector<Peak> candidates;
  for (std::size_t k = 1; k < P.size(); ++k) {
    bool left_ok = P[k] > P[k - 1];
    bool right_ok = k + 1 == P.size() || P[k] >= P[k + 1];
    if (left_ok && right_ok && P[k] > 0.0) candidates.push_back({k, psd.frequency[k], P[k], 0.0});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Peak& a, const Peak& b) { return a.power > b.power; });
  std::vector<Peak> chosen;
  for (const auto& c : candidates) {
    if (chosen.size() == count) break;
    bool far = std::all_of(chosen.begin(), chosen.end(), [&](const Peak& p) {
      return (c.cell > p.cell ? c.cell - p.cell : p.cell - c.cell) >= 2;
    });
    if (!far) continue;
    Peak p = c;
    p.half_width = half_width_at(psd, c.cell);
    chosen.push_back(p);
  }
  return chosen;
}

InitResult init_spec(const TimeSeriesSet& ts, Variant variant, std::size_t Q, std::size_t grid_size,
                     std::uint64_t seed) {
  if (Q == 0) throw ConfigError("Q must be positive");
  const std::size_t M = ts.num_channels();
  if (M == 0) throw DataError("init: no channels");

  InitResult out;
  double f_max = 0.0;
  for (std::size_t c = 0; c < M; ++c) {
    if (ts.train_mask[c].size() < 4)
      throw DataError("periodogram: channel '" + ts.channels[c].name + "' has fewer than 4 training observations");
    auto t = train_times(ts.channels[c], ts.train_mask[c]);
    f_max = std::max(f_max, nyquist_estimate(t));
  }
  out.report.f_max = f_max;

  Rng rng(derive_seed(seed, 0));
  const double fallback_sigma = f_max / (2.0 * static_cast<double>(Q));
  auto scale_from = [&](double hw) {
    double sigma_f = hw > 0.0 ? hw * kHwhmToSigma : fallback_sigma;
    return (kTwoPi * sigma_f) * (kTwoPi * sigma_f);
  };

  std::vector<std::vector<Peak>> peaks(M);
  for (std::size_t c = 0; c < M; ++c) {
    ChannelInit ci;
    ci.name = ts.channels[c].name;
    ci.psd = estimate_psd(ts.channels[c], ts.train_mask[c], grid_size, f_max);
    ci.variance = variance_of(ts.channels[c], ts.train_mask[c]);
    if (!(ci.variance > 0.0)) throw DataError("init: channel '" + ci.name + "' has zero training variance");
    peaks[c] = pick_peaks(ci.psd, Q);
    out.report.channels.push_back(std::move(ci));
  }

  // Shared-spectrum variants pool peaks across channels, ranked by their
  // share of each channel's total periodogram power.
  std::vector<Peak> pooled;
  if (shares_spectrum(variant)) {
    std::vector<Peak> all;
    for (std::size_t c = 0; c < M; ++c) {
      const auto& P = out.report.channels[c].psd.power;
      double total = std::accumulate(P.begin(), P.end(), 0.0);
      for (auto p : pick_peaks(out.report.channels[c].psd, grid_size)) {
        p.power /= total > 0.0 ? total : 1.0;
        all.push_back(p);
      }
    }
    std::stable_sort(all.begin(), all.end(), [](const Peak& a, const Peak& b) { return a.power > b.power; });
    for (const auto& c : all) {
      if (pooled.size() == Q) break;
      bool far = std::all_of(pooled.begin(), pooled.end(), [&](const Peak& p) {
        return (c.cell > p.cell ? c.cell - p.cell : p.cell - c.cell) >= 2;
      });
      if (far) pooled.push_back(c);
    }
  }

  struct Slot {
    double freq, hw;
    bool padded;
  };
  auto fill = [&](const std::vector<Peak>& found) {
    std::vector<Slot> s;
    for (const auto& p : found) s.push_back({p.frequency, p.half_width, false});
    std::sort(s.begin(), s.end(), [](const Slot& a, const Slot& b) { return a.freq < b.freq; });
    while (s.size() < Q) s.push_back({f_max * rng.uniform_open_low(), 0.0, true});
    return s;
  };

  std::vector<std::vector<Slot>> slots(M);
  if (shares_spectrum(variant)) {
    auto shared = fill(pooled);
    for (auto& s : slots) s = shared;
  } else {
    for (std::size_t c = 0; c < M; ++c) slots[c] = fill(peaks[c]);
  }

  std::vector<SpectralComponent> comps;
  for (std::size_t q = 0; q < Q; ++q) {
    auto comp = SpectralComponent::zeros(M, 1);
    for (std::size_t c = 0; c < M; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      const Slot& s = slots[c][q];
      comp.mean(cc, 0) = s.freq;
      comp.scale(cc, 0) = scale_from(s.hw);
      // Each component starts with an equal share of the channel variance.
      double share = out.report.channels[c].variance / static_cast<double>(Q);
      switch (variant) {
        case Variant::mosm:
          comp.weight(cc) = std::sqrt(share / (std::sqrt(kTwoPi) * std::sqrt(comp.scale(cc, 0))));
          break;
        case Variant::smlmc: comp.weight(cc) = std::sqrt(share); break;
        default: comp.weight(cc) = share; break;
      }
    }
    comps.push_back(std::move(comp));
  }
  for (std::size_t c = 0; c < M; ++c) {
    auto& ci = out.report.channels[c];
    for (const auto& s : slots[c]) {
      ci.peak_frequencies.push_back(s.freq);
      ci.peak_widths.push_back(s.hw);
      ci.padded.push_back(s.padded);
    }
  }

  out.spec = KernelSpec(variant, M, 1, std::move(comps));
  out.noise.resize(static_cast<Eigen::Index>(M));
  for (std::size_t c = 0; c < M; ++c) out.noise(static_cast<Eigen::Index>(c)) = out.report.channels[c].variance / 10.0;
  return out;
}

GradientCheck check_gradient(const ParamLayout& layout, const Eigen::VectorXd& x, const TrainingData& data,
                             const Eigen::VectorXd& prior, double step) {
  GradientCheck gc;
  auto base = map_objective_with_gradient(layout, x, data, prior);
  gc.analytic = base.gradient;
  gc.numeric = Eigen::VectorXd::Zero(x.size());
  const double floor = 1e-6 * std::max(1.0, std::abs(base.value));
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    double fp, fm;
    try {
      fp = map_objective_with_gradient(layout, xp, data, prior).value;
      fm = map_objective_with_gradient(layout, xm, data, prior).value;
    } catch (const InvalidParameter&) {
      // Coordinate sits on a domain edge (a zero frequency); not checkable by central differences.
      gc.numeric(k) = gc.analytic(k);
      continue;
    }
    gc.numeric(k) = (fp - fm) / (2.0 * step);
    double a = gc.analytic(k), n = gc.numeric(k);
    double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
    gc.max_relative_error = std::max(gc.max_relative_error, rel);
  }
  return gc;
}

void fit_bounds(const ParamLayout& layout, double f_max, const Eigen::VectorXd& var, Eigen::VectorXd& lower,
                Eigen::VectorXd& upper) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto kinds = layout.kinds();
  lower = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(kinds.size()), -inf);
  upper = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(kinds.size()), inf);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    switch (kinds[k]) {
      case ParamKind::frequency:
        lower(kk) = 0.0;
        upper(kk) = f_max;
        break;
      case ParamKind::log_weight:
      case ParamKind::log_scale:
        lower(kk) = -30.0;
        upper(kk) = 30.0;
        break;
      case ParamKind::log_noise:
        upper(kk) = 30.0;
        break;
      default: break;
    }
  }
  // Noise floor keeps the Gram matrix well conditioned.
  for (std::size_t i = 0; i < layout.M(); ++i)
    lower(static_cast<Eigen::Index>(layout.noise(i))) = std::log(1e-6 * var(static_cast<Eigen::Index>(i)));
}

Eigen::VectorXd perturb(const ParamLayout& layout, const Eigen::VectorXd& start, std::uint64_t seed,
                        double lognormal_std, double additive_std, double f_max) {
  Rng rng(seed);
  Eigen::VectorXd x = start;
  const auto kinds = layout.kinds();
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    double z = rng.normal();
    switch (kinds[k]) {
      case ParamKind::log_weight:
      case ParamKind::log_scale:
      case ParamKind::log_noise: x(kk) += lognormal_std * z; break;
      case ParamKind::frequency: x(kk) = std::min(x(kk) * std::exp(lognormal_std * z), f_max); break;
      case ParamKind::signed_weight: x(kk) *= std::exp(lognormal_std * z); break;
      case ParamKind::delay:
      case ParamKind::phase: x(kk) += additive_std * z; break;
    }
  }
  return x;
}

namespace {

// A unit step in a frequency coordinate turns the phase by 2*pi*span over the
// data, orders of magnitude more than a unit step anywhere else. The optimizer
// works on frequencies divided by this factor.
Eigen::VectorXd optimizer_units(const ParamLayout& layout, const TimeSeriesSet& ts) {
  double span = 0.0;
  for (std::size_t c = 0; c < ts.num_channels(); ++c) {
    auto t = train_times(ts.channels[c], ts.train_mask[c]);
    if (!t.empty()) span = std::max(span, *std::max_element(t.begin(), t.end()) - *std::min_element(t.begin(), t.end()));
  }
  const auto kinds = layout.kinds();
  Eigen::VectorXd unit = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(kinds.size()));
  for (std::size_t k = 0; k < kinds.size(); ++k)
    if (kinds[k] == ParamKind::frequency) unit(static_cast<Eigen::Index>(k)) = 1.0 / (kTwoPi * std::max(span, 1.0));
  return unit;
}

}  // namespace

FitResult fit(const TimeSeriesSet& ts, const TrainingConfig& cfg) {
  if (cfg.trials == 0) throw ConfigError("trials must be at least 1");
  if (cfg.max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");

  FitResult result;
  InitResult init = init_spec(ts, cfg.variant, cfg.Q, cfg.grid_size, cfg.seed);
  result.init = init.report;

  const TrainingData data = training_data(ts);
  const Eigen::VectorXd prior = prior_scales(ts);
  for (Eigen::Index i = 0; i < prior.size(); ++i)
    if (!(prior(i) > 0.0)) throw DataError("degenerate magnitude prior: channel '" + ts.channels[static_cast<std::size_t>(i)].name + "' is all zero");

  const ParamLayout layout = ParamLayout::of(init.spec);
  const Eigen::VectorXd start = to_unconstrained(init.spec, init.noise);
  Eigen::VectorXd var(static_cast<Eigen::Index>(ts.num_channels()));
  for (std::size_t c = 0; c < ts.num_channels(); ++c) var(static_cast<Eigen::Index>(c)) = init.report.channels[c].variance;
  Eigen::VectorXd lower, upper;
  fit_bounds(layout, init.report.f_max, var, lower, upper);
  const Eigen::VectorXd unit = optimizer_units(layout, ts);

  struct Outcome {
    bool ok = false;
    TrialResult trial;
    std::string failure;
  };

  auto run_trial = [&](std::size_t index) -> Outcome {
    Outcome o;
    const std::uint64_t seed = derive_seed(cfg.seed, 1000 + index);
    try {
      Eigen::VectorXd x0 = perturb(layout, start, seed, cfg.lognormal_std, cfg.additive_std, init.report.f_max);
      x0 = x0.cwiseMax(lower).cwiseMin(upper);
      if (cfg.gradient_check) {
        auto gc = check_gradient(layout, x0, data, prior);
        if (gc.max_relative_error > 1e-3)
          throw NumericalError("gradient check failed at the initial point: max relative error " +
                               std::to_string(gc.max_relative_error));
      }
      double jitter = 0.0;
      ObjectiveFn fn = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
        auto v = map_objective_with_gradient(layout, z.cwiseProduct(unit), data, prior);
        g = v.gradient.cwiseProduct(unit);
        jitter = v.jitter;
        return v.value;
      };
      BoxLbfgsOptions opts;
      opts.max_iterations = cfg.max_iterations;
      auto r = minimize_box(fn, x0.cwiseQuotient(unit), lower.cwiseQuotient(unit), upper.cwiseQuotient(unit), opts);
      r.x = r.x.cwiseProduct(unit).cwiseMax(lower).cwiseMin(upper);

      auto [spec, noise] = from_unconstrained(layout, r.x);
      auto final_value = map_objective_with_gradient(layout, r.x, data, prior);
      o.trial.seed = seed;
      o.trial.initial_objective = r.initial_f;
      o.trial.final_objective = final_value.value;
      o.trial.converged = r.converged;
      o.trial.iterations = r.iterations;
      o.trial.message = r.message;
      o.trial.lognormal_std = cfg.lognormal_std;
      o.trial.additive_std = cfg.additive_std;
      o.trial.model.spec = std::move(spec);
      o.trial.model.noise = std::move(noise);
      o.trial.model.prior_scales = prior;
      o.trial.model.fit = {final_value.nll, seed, r.iterations, final_value.jitter};
      o.ok = true;
    } catch (const Error& e) {
      o.failure = "trial " + std::to_string(index) + " (seed " + std::to_string(seed) + "): " + e.what();
    }
    return o;
  };

  std::vector<Outcome> outcomes(cfg.trials);
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || cfg.trials == 1) {
    for (std::size_t k = 0; k < cfg.trials; ++k) outcomes[k] = run_trial(k);
  } else {
    for (std::size_t begin = 0; begin < cfg.trials; begin += threads) {
      std::vector<std::future<Outcome>> batch;
      for (std::size_t k = begin; k < std::min<std::size_t>(cfg.trials, begin + threads); ++k)
        batch.push_back(std::async(std::launch::async, run_trial, k));
      for (std::size_t k = 0; k < batch.size(); ++k) outcomes[begin + k] = batch[k].get();
    }
  }

  for (auto& o : outcomes) {
    if (o.ok)
      result.trials.push_back(std::move(o.trial));
    else
      result.failures.push_back(std::move(o.failure));
  }
  if (result.trials.empty()) {
    std::string msg = "training failed: every trial failed";
    for (const auto& f : result.failures) msg += "\n  " + f;
    throw NumericalError(msg);
  }
  std::stable_sort(result.trials.begin(), result.trials.end(), [](const TrialResult& a, const TrialResult& b) {
    return a.final_objective < b.final_objective;
  });
  return result;
}

}  // namespace mogp
