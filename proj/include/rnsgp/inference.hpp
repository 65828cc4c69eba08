#pragma once

#include "rnsgp/batch_solver.hpp"
#include "rnsgp/dataset.hpp"
#include "rnsgp/kernels.hpp"
#include "rnsgp/statespace_solver.hpp"

#include <Eigen/Dense>

namespace rnsgp {

struct PosteriorMarginal {
  Eigen::VectorXd times;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;

  /// Throws std::invalid_argument on length mismatch or negative variance.
  void validate() const;
};

/// GP regression with C_f fixed at the MAP u paths:
/// mean = C (C + R)^-1 y, variance = diag(C - C (C + R)^-1 C).
[[nodiscard]] PosteriorMarginal batch_marginal_uq(const BatchLatent& map_latent,
                                                  const TimeSeriesDataset& data,
                                                  const BatchModelSpec& spec);

/// Output of a scalar Kalman filter / RTS smoother pass.
struct ScalarSmootherResult {
  Eigen::VectorXd filtered_mean;
  Eigen::VectorXd filtered_variance;
  Eigen::VectorXd smoothed_mean;
  Eigen::VectorXd smoothed_variance;
};

/// Linear-Gaussian model x_k = a_k x_{k-1} + N(0, q_k), y_k = x_k + N(0, r_k),
/// x_0 ~ N(0, p0), for k = 1..T. Throws NumericalError on a non-positive
/// innovation variance.
[[nodiscard]] ScalarSmootherResult scalar_kalman_rts(const Eigen::VectorXd& factors,
                                                     const Eigen::VectorXd& process_var,
                                                     double p0, const Eigen::VectorXd& y,
                                                     const Eigen::VectorXd& noise_var);

/// Kalman filter and RTS smoother over the f-block with u frozen at the MAP
/// states; transitions from the configured discretization.
[[nodiscard]] PosteriorMarginal ss_marginal_uq(
    const SsLatent& map_latent, const TimeSeriesDataset& data, const SsNsgpModel& model,
    DiscretizationScheme scheme = DiscretizationScheme::kExactOu);

struct GpMleResult {
  double length_scale = 0.0;
  double magnitude = 0.0;
  /// y^T (C + R)^-1 y + log|2 pi (C + R)|
  double nlml = 0.0;
};

/// Negative log marginal likelihood (doubled) of a stationary Matérn GP and
/// its gradient with respect to (log ell, log sigma).
[[nodiscard]] double gp_nlml(const TimeSeriesDataset& data, Smoothness nu, double log_ell,
                             double log_sigma, Eigen::Vector2d* grad);

/// Multi-start L-BFGS over (log ell, log sigma) from a 3 x 3 grid; the best
/// NLML wins. Throws NumericalError if every start fails.
[[nodiscard]] GpMleResult gp_mle_fit(const TimeSeriesDataset& data, Smoothness nu);

/// Stationary GP posterior marginals at the data times.
[[nodiscard]] PosteriorMarginal gp_posterior(const TimeSeriesDataset& data, Smoothness nu,
                                             double length_scale, double magnitude);

[[nodiscard]] double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

/// -sum_k log N(y_k | mean_k, variance_k + R_k).
[[nodiscard]] double nlpd(const PosteriorMarginal& marginal, const Eigen::VectorXd& test_values,
                          const Eigen::VectorXd& noise_var);

}  // namespace rnsgp
