#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mogp/error.hpp"
#include "mogp/params.hpp"
#include "mogp/trainer.hpp"
#include "support.hpp"

using namespace mogp;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

Channel sampled(std::string name, std::size_t n, double spacing, const std::function<double(double)>& f) {
  Channel ch;
  ch.name = std::move(name);
  for (std::size_t k = 0; k < n; ++k) {
    double t = spacing * static_cast<double>(k);
    ch.observations.push_back({t, f(t)});
  }
  return ch;
}

// Textbook Lomb-Scargle power at one frequency, written out directly.
double lomb_scargle(const std::vector<double>& t, const std::vector<double>& y, double f) {
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double w = kTwoPi * f, s2 = 0, c2 = 0;
  for (double ti : t) {
    s2 += std::sin(2 * w * ti);
    c2 += std::cos(2 * w * ti);
  }
  double tau = std::atan2(s2, c2) / (2 * w);
  double yc = 0, ys = 0, cc = 0, ss = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    double c = std::cos(w * (t[k] - tau)), s = std::sin(w * (t[k] - tau));
    yc += (y[k] - mean) * c;
    ys += (y[k] - mean) * s;
    cc += c * c;
    ss += s * s;
  }
  // At the Nyquist frequency on a regular grid the sine basis vanishes.
  return 0.5 * ((cc > 1e-9 ? yc * yc / cc : 0.0) + (ss > 1e-9 ? ys * ys / ss : 0.0));
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

TimeSeriesSet two_channel_set(std::uint64_t seed, double delay = 2.0) {
  Rng rng(seed);
  auto f = [](double t) { return std::sin(kTwoPi * 0.07 * t) + 0.4 * std::sin(kTwoPi * 0.19 * t); };
  auto a = sampled("a", 50, 1.0, [&](double t) { return f(t) + 0.05 * rng.normal(); });
  auto b = sampled("b", 50, 1.0, [&](double t) { return 0.8 * f(t - delay) + 0.05 * rng.normal(); });
  return make_series_set({a, b});
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("periodogram finds a single sinusoid") {
    auto ch = sampled("s", 100, 1.0, [](double t) { return std::sin(kTwoPi * 0.1 * t); });
    auto psd = estimate_psd(ch, 1000);
    REQUIRE(psd.frequency.size() == 1000);
    CHECK(psd.frequency.back() == doctest::Approx(0.5));
    const double cell = psd.frequency[1] - psd.frequency[0];
    CHECK(std::abs(psd.frequency[argmax(psd.power)] - 0.1) <= cell);

    std::vector<double> t, y;
    for (const auto& o : ch.observations) t.push_back(o.t), y.push_back(o.y);
    for (std::size_t k : {0ul, 99ul, 199ul, 500ul, 999ul})
      CHECK(psd.power[k] == doctest::Approx(lomb_scargle(t, y, psd.frequency[k])).epsilon(1e-9));
  }

  TEST_CASE("constant signal has no power") {
    auto psd = estimate_psd(sampled("c", 40, 1.0, [](double) { return 3.25; }), 200);
    for (double p : psd.power) CHECK(p <= 1e-12);
  }

  TEST_CASE("two sinusoids give two local maxima") {
    auto ch = sampled("s", 200, 1.0, [](double t) { return std::sin(kTwoPi * 0.05 * t) + 0.7 * std::sin(kTwoPi * 0.2 * t); });
    auto psd = estimate_psd(ch, 1000);
    auto peaks = pick_peaks(psd, 2);
    REQUIRE(peaks.size() == 2);
    const double cell = psd.frequency[1] - psd.frequency[0];
    std::vector<double> f{peaks[0].frequency, peaks[1].frequency};
    std::sort(f.begin(), f.end());
    CHECK(std::abs(f[0] - 0.05) <= cell);
    CHECK(std::abs(f[1] - 0.2) <= cell);
    CHECK(peaks[0].power >= peaks[1].power);
    CHECK(peaks[0].half_width > 0.0);
  }

  TEST_CASE("irregular sampling") {
    Rng rng(3);
    Channel ch;
    ch.name = "irr";
    double t = 0;
    for (int k = 0; k < 150; ++k) {
      t += 0.5 + rng.uniform();
      ch.observations.push_back({t, std::cos(kTwoPi * 0.12 * t)});
    }
    auto psd = estimate_psd(ch, 1000);
    const double cell = psd.frequency[1] - psd.frequency[0];
    CHECK(std::abs(psd.frequency[argmax(psd.power)] - 0.12) <= cell);
  }

  TEST_CASE("too few points") {
    CHECK_THROWS_AS(estimate_psd(sampled("s", 3, 1.0, [](double t) { return t; }), 10), DataError);
  }

  TEST_CASE("peak picking rules") {
    Psd psd;
    for (int k = 1; k <= 10; ++k) psd.frequency.push_back(0.05 * k);
    psd.power = {9, 1, 5, 4.9, 1, 1, 3, 1, 2, 1};
    auto p = pick_peaks(psd, 5);
    // Cell 0 is excluded; cell 3 is not a local maximum; 2, 6 and 8 are.
    REQUIRE(p.size() == 3);
    CHECK(p[0].cell == 2);
    CHECK(p[1].cell == 6);
    CHECK(p[2].cell == 8);
    for (std::size_t a = 0; a < p.size(); ++a)
      for (std::size_t b = a + 1; b < p.size(); ++b) CHECK((p[a].cell > p[b].cell ? p[a].cell - p[b].cell : p[b].cell - p[a].cell) >= 2);
  }

  TEST_CASE("init from a pure sinusoid") {
    auto ts = make_series_set({sampled("s", 100, 1.0, [](double t) { return 2 * std::sin(kTwoPi * 0.1 * t); })});
    auto init = init_spec(ts, Variant::mosm, 1, 1000);
    const auto& c = init.spec.component(0);
    CHECK(std::abs(c.mean(0, 0) - 0.1) <= 0.5 / 1000);
    CHECK(c.delay(0, 0) == 0.0);
    CHECK(c.phase(0) == 0.0);
    CHECK(init.report.f_max == doctest::Approx(0.5));
    CHECK(init.noise(0) == doctest::Approx(init.report.channels[0].variance / 10));
    CHECK(init.report.channels[0].peak_frequencies.size() == 1);
    CHECK_FALSE(init.report.channels[0].padded[0]);
  }

  TEST_CASE("missing peaks are padded with random frequencies") {
    auto ts = make_series_set({sampled("s", 60, 1.0, [](double t) { return std::sin(kTwoPi * 0.1 * t); })});
    auto pad = [&](std::uint64_t seed) { return init_spec(ts, Variant::smigp, 40, 100, seed); };
    auto a = pad(1), b = pad(1), c = pad(2);
    const auto& rep = a.report.channels[0];
    CHECK(std::count(rep.padded.begin(), rep.padded.end(), true) > 0);
    for (double f : rep.peak_frequencies) {
      CHECK(f > 0.0);
      CHECK(f <= a.report.f_max);
    }
    CHECK(a.spec == b.spec);
    CHECK_FALSE(a.spec == c.spec);
  }

  TEST_CASE("shared-spectrum variants pool peaks") {
    auto ch = sampled("a", 80, 1.0, [](double t) { return std::sin(kTwoPi * 0.08 * t) + 0.5 * std::sin(kTwoPi * 0.21 * t); });
    auto twin = ch;
    twin.name = "b";
    auto ts = make_series_set({ch, twin});
    for (Variant v : {Variant::csm, Variant::smlmc, Variant::smigp}) {
      auto init = init_spec(ts, v, 2);
      for (const auto& c : init.spec.components()) {
        CHECK(c.mean(0, 0) == c.mean(1, 0));
        CHECK(c.scale(0, 0) == c.scale(1, 0));
      }
    }
    auto mosm = init_spec(ts, Variant::mosm, 2);
    for (const auto& c : mosm.spec.components()) CHECK(c.mean(0, 0) == c.mean(1, 0));
  }

  TEST_CASE("initial weights split the channel variance across components") {
    auto ts = two_channel_set(5);
    for (Variant v : {Variant::mosm, Variant::csm, Variant::smlmc, Variant::smigp}) {
      CAPTURE(to_string(v));
      auto init = init_spec(ts, v, 3);
      for (std::size_t c = 0; c < 2; ++c) {
        double k0 = kernel_eval(init.spec, c, c, 0.0);
        CHECK(k0 == doctest::Approx(init.report.channels[c].variance).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("gradient check on the initial point") {
    Rng rng(9);
    for (Variant v : {Variant::mosm, Variant::csm, Variant::smlmc, Variant::smigp}) {
      auto ts = two_channel_set(rng.below(1000));
      auto init = init_spec(ts, v, 2);
      auto layout = ParamLayout::of(init.spec);
      auto gc = check_gradient(layout, to_unconstrained(init.spec, init.noise), training_data(ts), prior_scales(ts));
      CHECK(gc.max_relative_error <= 1e-4);
      CHECK(gc.analytic.size() == gc.numeric.size());
    }
  }

  TEST_CASE("perturbation is seeded and respects parameter kinds") {
    ParamLayout L(Variant::mosm, 2, 2, 1);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L.size()), 0.1);
    auto a = perturb(L, x, 1, 0.25, 0.1, 0.5), b = perturb(L, x, 1, 0.25, 0.1, 0.5), c = perturb(L, x, 2, 0.25, 0.1, 0.5);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(perturb(L, x, 3, 0.0, 0.0, 0.5) == x);
    auto kinds = L.kinds();
    for (std::size_t k = 0; k < kinds.size(); ++k)
      if (kinds[k] == ParamKind::frequency) {
        CHECK(a(static_cast<Eigen::Index>(k)) > 0.0);
        CHECK(a(static_cast<Eigen::Index>(k)) <= 0.5);
      }
  }

  TEST_CASE("unperturbed single trial does not increase the objective") {
    auto ts = two_channel_set(1);
    TrainingConfig cfg;
    cfg.variant = Variant::csm;
    cfg.Q = 2;
    cfg.trials = 1;
    cfg.lognormal_std = 0.0;
    cfg.additive_std = 0.0;
    cfg.max_iterations = 100;
    auto r = fit(ts, cfg);
    REQUIRE(r.trials.size() == 1);
    const auto& t = r.trials[0];
    CHECK(t.final_objective <= t.initial_objective);
    CHECK(t.iterations <= 100);
    CHECK(t.model.fit.seed == t.seed);
    CHECK(map_objective(t.model, ts) == doctest::Approx(t.final_objective).epsilon(1e-10));
  }

  TEST_CASE("fit is deterministic, sorted and seed isolated") {
    auto ts = two_channel_set(2);
    TrainingConfig cfg;
    cfg.variant = Variant::mosm;
    cfg.Q = 1;
    cfg.trials = 3;
    cfg.seed = 77;
    cfg.max_iterations = 60;
    auto a = fit(ts, cfg), b = fit(ts, cfg);
    REQUIRE(a.trials.size() == 3);
    REQUIRE(b.trials.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(a.trials[k].seed == b.trials[k].seed);
      CHECK(a.trials[k].final_objective == b.trials[k].final_objective);
      CHECK(a.trials[k].model.spec == b.trials[k].model.spec);
      CHECK(a.trials[k].model.noise == b.trials[k].model.noise);
      CHECK(a.trials[k].final_objective <= a.trials[k].initial_objective);
    }
    CHECK(a.trials[0].final_objective <= a.trials[1].final_objective);
    CHECK(a.trials[1].final_objective <= a.trials[2].final_objective);
    CHECK(a.trials[0].initial_objective != a.trials[1].initial_objective);

    cfg.threads = 3;
    auto par = fit(ts, cfg);
    for (std::size_t k = 0; k < 3; ++k) CHECK(par.trials[k].final_objective == a.trials[k].final_objective);
  }

  TEST_CASE("all-zero channel is a degenerate prior") {
    auto z = sampled("z", 20, 1.0, [](double) { return 0.0; });
    auto s = sampled("s", 20, 1.0, [](double t) { return std::sin(t); });
    TrainingConfig cfg;
    cfg.trials = 1;
    cfg.Q = 1;
    CHECK_THROWS_AS(fit(make_series_set({s, z}), cfg), DataError);
  }

  TEST_CASE("bounds contain the initial point") {
    auto ts = two_channel_set(4);
    for (Variant v : {Variant::mosm, Variant::csm, Variant::smlmc, Variant::smigp}) {
      auto init = init_spec(ts, v, 3);
      auto L = ParamLayout::of(init.spec);
      Eigen::VectorXd var(2);
      var << init.report.channels[0].variance, init.report.channels[1].variance;
      Eigen::VectorXd lo, hi;
      fit_bounds(L, init.report.f_max, var, lo, hi);
      auto x = to_unconstrained(init.spec, init.noise);
      CHECK((x.array() >= lo.array()).all());
      CHECK((x.array() <= hi.array()).all());
    }
  }
}
