#pragma once

#include <Eigen/Dense>

#include <functional>

namespace rnsgp {

/// Returns the objective value at x and writes the gradient into `grad`
/// (already sized to the problem dimension). May throw NumericalError when x
/// lies outside the numerically valid region; the optimizer treats that as
/// an infinite value during line searches.
using SmoothObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct SmoothProblem {
  Eigen::Index dimension = 0;
  SmoothObjective objective;
  /// Optional box; empty vectors mean [-default_box, default_box].
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double default_box = 1e6;
};

struct LbfgsSettings {
  double tol_grad = 1e-6;
  int max_iters = 100;
  int history = 10;
  double armijo = 1e-4;
  /// Curvature constant of the strong Wolfe condition.
  double wolfe = 0.9;
  double initial_step = 1.0;
  /// Relative function-change floor: |f_k - f_{k+1}| <= rel_ftol * |f_k|.
  double rel_ftol = 1e-13;
  int max_backtracks = 60;
};

struct OptimResult {
  Eigen::VectorXd minimizer;
  double value = 0.0;
  double grad_norm = 0.0;  // infinity norm of the projected gradient
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with Armijo backtracking and gradient projection onto
/// the box. The objective sequence is monotone non-increasing.
/// Throws NumericalError if the objective is not finite at x0.
[[nodiscard]] OptimResult minimize_smooth(const SmoothProblem& p, const Eigen::VectorXd& x0,
                                          const LbfgsSettings& settings);

[[nodiscard]] OptimResult minimize_smooth(const SmoothProblem& p, const Eigen::VectorXd& x0,
                                          double tol_grad, int max_iters);

/// Max over coordinates of |analytic - central difference| / max(1, |central difference|).
[[nodiscard]] double check_gradient(const SmoothProblem& p, const Eigen::VectorXd& x, double step);

}  // namespace rnsgp
