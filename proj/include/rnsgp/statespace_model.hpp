#pragma once

#include "rnsgp/dataset.hpp"
#include "rnsgp/transforms.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>

namespace rnsgp {

/// Matérn-1/2 state-space NSGP with state z = [f, u_ell, u_sigma]:
///
///   df      = -f / g_ell(u_ell) dt + sqrt(2) g_sigma(u_sigma) / sqrt(g_ell(u_ell)) dW
///   du_ell  = -u_ell / ell_u dt    + sqrt(2) sigma_u / sqrt(ell_u) dW_ell
///   du_sig  = -u_sig / ell_u dt    + sqrt(2) sigma_u / sqrt(ell_u) dW_sig
///   y_k     = f(t_k) + r_k
///
/// Here g_ell is an OU time constant, not a Paciorek length-scale.
struct SsNsgpModel {
  LinkTransform ell_link{LinkKind::kExp, 2.0, 0.0};
  LinkTransform sigma_link{LinkKind::kExp, -1.0, 0.0};
  double u_length_scale = 0.01;
  double u_magnitude = 3.0;
  /// Prior covariance of z_0; defaults to diag(g_sigma(0)^2, sigma_u^2, sigma_u^2).
  std::optional<Eigen::Matrix3d> p0;

  [[nodiscard]] Eigen::Matrix3d initial_covariance() const;
  void validate() const;
};

enum class DiscretizationScheme { kExactOu, kEulerMaruyama };

struct DriftDiffusion {
  Eigen::Vector3d drift;
  /// Diagonal of the (diagonal) dispersion matrix.
  Eigen::Vector3d diffusion;
};

[[nodiscard]] DriftDiffusion sde_drift_diffusion(const Eigen::Vector3d& z, const SsNsgpModel& model);

/// One transition z_k ~ N(mean, diag(cov)) evaluated at z_{k-1}.
struct DiscreteTransition {
  Eigen::Vector3d mean;
  Eigen::Vector3d cov;  // diagonal of Q(z_{k-1})
  double dt = 0.0;

  [[nodiscard]] Eigen::Matrix3d covariance() const { return cov.asDiagonal(); }
};

/// Frozen-coefficient exact OU moments (default) or Euler–Maruyama.
/// Throws std::invalid_argument if dt <= 0.
[[nodiscard]] DiscreteTransition discretize(const Eigen::Vector3d& z_prev, double dt,
                                            const SsNsgpModel& model,
                                            DiscretizationScheme scheme);

/// Transition quantities and their derivatives with respect to the previous
/// u_ell and u_sigma. The f mean is f_factor * f_prev; the u means are
/// u_factor * u_prev.
struct TransitionJet {
  double f_factor = 0.0;
  double df_factor_du_ell = 0.0;
  double q_f = 0.0;
  double dq_f_du_ell = 0.0;
  double dq_f_du_sigma = 0.0;
  double u_factor = 0.0;
  double q_u = 0.0;
};

[[nodiscard]] TransitionJet transition_jet(double u_ell, double u_sigma, double dt,
                                           const SsNsgpModel& model, DiscretizationScheme scheme);

/// Step sizes dt_k = t_k - t_{k-1}, k = 1..T, with the initial time
/// t_0 = t_1 - (t_2 - t_1) (t_0 = t_1 - 1 for a single measurement).
[[nodiscard]] Eigen::VectorXd step_sizes(const Eigen::VectorXd& times);

using PathFn = std::function<double(double)>;

/// Conditional covariance of f(t), f(t') given u paths, for the scalar
/// linear SDE of f:
///   Lambda(t, t0) P Lambda(t', t0) + int_{t0}^{min(t,t')} Lambda(t, s) B(s)^2 Lambda(t', s) ds,
/// with Lambda(t, s) = exp(-int_s^t 1 / g_ell(u_ell(r)) dr), composite Simpson
/// quadrature on `nodes` points (rounded up to odd).
[[nodiscard]] double implied_covariance(const PathFn& u_ell, const PathFn& u_sigma, double t,
                                        double tp, double t0, double prior_var,
                                        const SsNsgpModel& model, int nodes = 201);

}  // namespace rnsgp
