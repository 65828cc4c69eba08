#pragma once

#include "rnsgp/dataset.hpp"
#include "rnsgp/kernels.hpp"
#include "rnsgp/regularization.hpp"
#include "rnsgp/transforms.hpp"

#include <Eigen/Dense>

#include <array>
#include <utility>
#include <vector>

namespace rnsgp {

/// Hierarchical batch NSGP: f | u ~ GP(0, C_f(u)) with the Paciorek kernel,
/// u_ell, u_sigma ~ GP(0, stationary Matérn(u_length_scale, u_magnitude)).
struct BatchModelSpec {
  Smoothness nu = Smoothness::kHalf;
  LinkTransform ell_link{LinkKind::kExp, 2.0, 0.0};
  LinkTransform sigma_link{LinkKind::kExp, -1.0, 0.0};
  double u_length_scale = 0.01;
  double u_magnitude = 3.0;
  /// Smoothness of the stationary u-process priors.
  Smoothness u_nu = Smoothness::kHalf;
  /// Relative jitter: jitter = jitter * max diag(C).
  double jitter = 1e-9;

  void validate() const;
};

/// Latent values at the data times; pack() gives z = [f; u_ell; u_sigma].
struct BatchLatent {
  Eigen::VectorXd f;
  Eigen::VectorXd u_ell;
  Eigen::VectorXd u_sigma;

  [[nodiscard]] Eigen::Index size() const { return f.size(); }
  [[nodiscard]] Eigen::VectorXd pack() const;
  static BatchLatent unpack(const Eigen::VectorXd& z);
  /// f = y, u = 0.
  static BatchLatent initial(const TimeSeriesDataset& data);
};

/// Twice the negative log unnormalized posterior and its gradient.
///
/// Holds the factorized (constant) priors of u_ell and u_sigma so repeated
/// evaluations only rebuild C_f.
class BatchObjective {
 public:
  BatchObjective(TimeSeriesDataset data, BatchModelSpec spec);

  /// Full objective; writes the 3T gradient when `grad` is non-null.
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const;

  /// log|2 pi C_ell| + log|2 pi C_sigma| (independent of the latent values).
  [[nodiscard]] double prior_logdet() const { return prior_logdet_; }

  /// C_f (with jitter) for the given u paths.
  [[nodiscard]] Eigen::MatrixXd covariance_f(const Eigen::VectorXd& u_ell,
                                             const Eigen::VectorXd& u_sigma) const;

  [[nodiscard]] const TimeSeriesDataset& data() const { return data_; }
  [[nodiscard]] const BatchModelSpec& spec() const { return spec_; }

 private:
  TimeSeriesDataset data_;
  BatchModelSpec spec_;
  Eigen::LLT<Eigen::MatrixXd> prior_u_;
  double prior_logdet_ = 0.0;
};

/// Value and 3T gradient of the batch MAP objective.
[[nodiscard]] std::pair<double, Eigen::VectorXd> nsgp_objective(const BatchLatent& latent,
                                                                const TimeSeriesDataset& data,
                                                                const BatchModelSpec& spec);

struct AdmmState {
  BatchLatent latent;
  /// Auxiliaries v and duals eta, ordered (f, ell, sigma).
  std::array<Eigen::VectorXd, 3> aux;
  std::array<Eigen::VectorXd, 3> dual;
  double initial_lagrangian = 0.0;
  std::vector<AdmmIterate> history;
  bool converged = false;
  /// Lagrangian monitor: the sequence (initial, history...) never increased
  /// by more than the configured slack.
  bool lagrangian_monotone = true;

  [[nodiscard]] std::vector<double> lagrangian_sequence() const;
};

/// Augmented Lagrangian of the batch splitting, including the constant
/// prior log-determinants.
[[nodiscard]] double augmented_lagrangian(const AdmmState& state, const TimeSeriesDataset& data,
                                          const BatchModelSpec& spec, const RegConfig& reg);

/// Starting state: latent as given, v = Phi x, eta = 0.
[[nodiscard]] AdmmState initial_admm_state(const BatchLatent& init, const RegConfig& reg);

/// ADMM for min L_NSGP + sum_b lambda_b ||Phi_b x_b||_1.
/// Throws NumericalError (with the outer iteration index) if the smooth
/// subproblem leaves the valid region or the Lagrangian becomes non-finite.
[[nodiscard]] std::pair<BatchLatent, AdmmState> admm_fit(const TimeSeriesDataset& data,
                                                         const BatchModelSpec& spec,
                                                         const RegConfig& reg,
                                                         const BatchLatent& init,
                                                         const AdmmSettings& stop = {});

/// L_NSGP + L_REG evaluated directly (no splitting).
[[nodiscard]] double regularized_objective(const BatchObjective& objective, const RegConfig& reg,
                                           const Eigen::VectorXd& z);

/// Direct L-BFGS minimization of L_NSGP (no regularization).
[[nodiscard]] std::pair<BatchLatent, OptimResult> map_fit(const TimeSeriesDataset& data,
                                                          const BatchModelSpec& spec,
                                                          const BatchLatent& init,
                                                          const LbfgsSettings& settings);

/// Normalized subgradient descent with step c / sqrt(i); returns the
/// best-objective iterate.
[[nodiscard]] BatchLatent subgradient_fit(const TimeSeriesDataset& data,
                                          const BatchModelSpec& spec, const RegConfig& reg,
                                          const BatchLatent& init,
                                          const SubgradientSettings& stop = {});

}  // namespace rnsgp
