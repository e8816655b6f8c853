#pragma once

#include <functional>

#include <Eigen/Dense>

namespace adscan::optim {

/// Returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-6;  // on the Euclidean norm of the gradient
  int history = 10;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Deterministic full-batch L-BFGS with Armijo backtracking. Every accepted
/// step decreases the objective, so the result is never worse than `x0`.
LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace adscan::optim
