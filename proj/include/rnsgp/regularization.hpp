#pragma once

#include "rnsgp/optimizer.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace rnsgp {

enum class RegMatrixKind { kIdentity, kFirstDifference, kDense };

/// Square T x T regularization operator Phi.
///
/// kFirstDifference keeps the first row as the identity so the operator is
/// invertible: (Phi x)_0 = x_0, (Phi x)_k = x_k - x_{k-1}.
class RegMatrix {
 public:
  RegMatrix() = default;

  static RegMatrix identity() { return RegMatrix(RegMatrixKind::kIdentity, {}); }
  static RegMatrix first_difference() { return RegMatrix(RegMatrixKind::kFirstDifference, {}); }
  static RegMatrix dense(Eigen::MatrixXd m) { return RegMatrix(RegMatrixKind::kDense, std::move(m)); }

  [[nodiscard]] RegMatrixKind kind() const { return kind_; }
  [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd apply_transpose(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::MatrixXd to_dense(Eigen::Index n) const;
  void validate(Eigen::Index n) const;

 private:
  RegMatrix(RegMatrixKind kind, Eigen::MatrixXd m) : kind_(kind), dense_(std::move(m)) {}

  RegMatrixKind kind_ = RegMatrixKind::kIdentity;
  Eigen::MatrixXd dense_;
};

/// One L1 block: lambda * ||Phi x||_1 with ADMM penalty rho.
struct RegBlock {
  double lambda = 0.0;
  double rho = 1.0;
  RegMatrix phi;
};

/// Regularization of the batch latent blocks (f, u_ell, u_sigma).
struct RegConfig {
  RegBlock f;
  RegBlock ell;
  RegBlock sigma;

  [[nodiscard]] std::array<const RegBlock*, 3> blocks() const { return {&f, &ell, &sigma}; }
  /// Throws std::invalid_argument naming the offending field.
  void validate(Eigen::Index n) const;
};

/// Elementwise sign(a_i) * max(|a_i| - kappa, 0): the prox of kappa * ||.||_1.
[[nodiscard]] Eigen::VectorXd soft_threshold(const Eigen::VectorXd& a, double kappa);

/// sgn(v) . (a - v) + (rho / 2) ||a - v||^2 >= -T / (2 rho).
[[nodiscard]] bool lemma6_inequality_holds(const Eigen::VectorXd& v, const Eigen::VectorXd& a,
                                           double rho);

struct AdmmSettings {
  /// Negative values select the default 1e-4 * sqrt(n).
  double tol_primal = -1.0;
  double tol_dual = -1.0;
  int max_outer = 200;
  LbfgsSettings inner{.tol_grad = 1e-6, .max_iters = 100};
  /// Relative slack of the Lagrangian monotonicity monitor.
  double monotone_slack = 1e-8;
};

struct SubgradientSettings {
  int max_iters = 20000;
  /// Iteration i moves x <- x - (step / ||g_1||) g / sqrt(i), where g_1 is the
  /// gradient at the initial point.
  double step = 1.0;
};

struct AdmmIterate {
  double lagrangian = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// True when every entry of `lagrangians` is <= its predecessor plus
/// rel_slack * |first|.
[[nodiscard]] bool is_non_increasing(const std::vector<double>& lagrangians, double rel_slack);

}  // namespace rnsgp

namespace rnsgp {

/// Subgradient method x <- x - (c / sqrt(i)) g with c = step / ||g_1|| on a nonsmooth
/// objective whose callable returns the value and one subgradient. Returns
/// the best iterate seen. Non-finite iterates are discarded and the walk
/// restarts from the best point. Throws NumericalError if x0 is not finite.
[[nodiscard]] Eigen::VectorXd subgradient_descent(const SmoothObjective& objective,
                                                  const Eigen::VectorXd& x0,
                                                  const SubgradientSettings& settings);

/// lambda * Phi^T sign(Phi x), the subgradient of lambda ||Phi x||_1 with
/// sign(0) = 0.
[[nodiscard]] Eigen::VectorXd l1_subgradient(const RegBlock& block, const Eigen::VectorXd& x);

}  // namespace rnsgp
