#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

namespace mogp {

/// Objective callback: returns f(x) and writes the gradient. May throw; a
/// throwing trial point is treated as f = +inf by the line search.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BoxLbfgsOptions {
  int max_iterations = 5000;
  int memory = 10;
  double gradient_tolerance = 1e-5;  // on the projected gradient, inf-norm
  double relative_decrease = 1e-10;  // stop after `stall_window` iterations below this
  int stall_window = 5;
  int max_line_search = 40;
  double armijo = 1e-4;
};

struct BoxLbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double initial_f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Projected limited-memory BFGS on the box [lower, upper]. The search
/// direction comes from the two-loop recursion restricted to the free
/// variables; steps follow the projected path with Armijo backtracking, so
/// every accepted iterate strictly decreases f.
BoxLbfgsResult minimize_box(const ObjectiveFn& fn, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const BoxLbfgsOptions& options = {});

}  // namespace mogp
