#include "mogp/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "mogp/error.hpp"

namespace mogp {

namespace {

struct Pair {
  Eigen::VectorXd s, y;
  double rho;
};

}  // namespace

BoxLbfgsResult minimize_box(const ObjectiveFn& fn, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const BoxLbfgsOptions& opt) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw InvalidParameter("minimize_box: bound length mismatch");
  if ((lower.array() > upper.array()).any()) throw InvalidParameter("minimize_box: lower bound above upper bound");

  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v.cwiseMax(lower).cwiseMin(upper); };

  BoxLbfgsResult res;
  res.x = project(x0);
  Eigen::VectorXd g(n);
  res.f = fn(res.x, g);
  res.initial_f = res.f;
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !g.allFinite()) throw NumericalError("minimize_box: objective not finite at the start point");

  std::deque<Pair> hist;
  int stall = 0;
  Eigen::VectorXd gt(n);

  while (res.iterations < opt.max_iterations) {
    Eigen::VectorXd pg = project(res.x - g) - res.x;
    if (pg.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      break;
    }

    Eigen::VectorXd free = Eigen::VectorXd::Ones(n);
    for (Eigen::Index k = 0; k < n; ++k)
      if ((res.x(k) <= lower(k) && g(k) > 0.0) || (res.x(k) >= upper(k) && g(k) < 0.0)) free(k) = 0.0;

    auto direction = [&]() -> Eigen::VectorXd {
      Eigen::VectorXd q = g.cwiseProduct(free);
      std::vector<double> a(hist.size());
      for (std::size_t k = hist.size(); k-- > 0;) {
        a[k] = hist[k].rho * hist[k].s.cwiseProduct(free).dot(q);
        q -= a[k] * hist[k].y.cwiseProduct(free);
      }
      if (!hist.empty()) {
        const auto& last = hist.back();
        double yy = last.y.cwiseProduct(free).squaredNorm();
        double sy = last.s.cwiseProduct(free).dot(last.y.cwiseProduct(free));
        if (yy > 0.0 && sy > 0.0) q *= sy / yy;
      }
      for (std::size_t k = 0; k < hist.size(); ++k) {
        double b = hist[k].rho * hist[k].y.cwiseProduct(free).dot(q);
        q += (a[k] - b) * hist[k].s.cwiseProduct(free);
      }
      return -q.cwiseProduct(free);
    };

    Eigen::VectorXd d = direction();
    if (!(g.dot(d) < 0.0) || !d.allFinite()) {
      hist.clear();
      d = -g.cwiseProduct(free);
    }

    bool accepted = false;
    Eigen::VectorXd xt;
    double ft = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double step = hist.empty() ? std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;
      for (int ls = 0; ls < opt.max_line_search; ++ls, step *= 0.5) {
        xt = project(res.x + step * d);
        double decrease = std::min(g.dot(xt - res.x), 0.0);
        try {
          ft = fn(xt, gt);
        } catch (const Error&) {
          ft = std::numeric_limits<double>::infinity();
        }
        ++res.evaluations;
        if (std::isfinite(ft) && gt.allFinite() && ft < res.f && ft <= res.f + opt.armijo * decrease) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (hist.empty()) break;
        hist.clear();
        d = -g.cwiseProduct(free);
      }
    }
    if (!accepted) {
      res.message = "line search could not decrease the objective";
      res.converged = pg.lpNorm<Eigen::Infinity>() < 1e3 * opt.gradient_tolerance;
      break;
    }

    Eigen::VectorXd s = xt - res.x, y = gt - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
      hist.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(hist.size()) > opt.memory) hist.pop_front();
    }

    double drop = res.f - ft;
    stall = drop <= opt.relative_decrease * std::max(1.0, std::abs(res.f)) ? stall + 1 : 0;
    res.x = xt;
    res.f = ft;
    g = gt;
    ++res.iterations;
    if (stall >= opt.stall_window) {
      res.converged = true;
      res.message = "relative decrease below tolerance";
      break;
    }
  }
  if (res.message.empty()) res.message = "iteration limit reached";
  return res;
}

}  // namespace mogp
