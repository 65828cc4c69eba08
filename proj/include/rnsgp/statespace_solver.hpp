#pragma once

#include "rnsgp/dataset.hpp"
#include "rnsgp/regularization.hpp"
#include "rnsgp/statespace_model.hpp"

#include <Eigen/Dense>

#include <array>
#include <utility>
#include <vector>

namespace rnsgp {

using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// States z_0..z_T stored row-wise; row k is [f, u_ell, u_sigma] at t_k
/// (row 0 is the initial state at t_0).
struct SsLatent {
  StateMatrix states;

  [[nodiscard]] Eigen::Index steps() const { return states.rows() - 1; }
  [[nodiscard]] Eigen::VectorXd pack() const;
  static SsLatent unpack(const Eigen::VectorXd& z);
  /// z_k = (y_k, 0, 0) for k >= 1 and z_0 = (y_1, 0, 0).
  static SsLatent initial(const TimeSeriesDataset& data);
};

/// Sequential MAP objective:
///   z_0^T P0^-1 z_0 + log|2 pi P0|
///   + sum_k (y_k - f_k)^2 / R_k + ||z_k - a(z_{k-1})||^2_Q(z_{k-1}) + log|2 pi Q(z_{k-1})|.
class SsObjective {
 public:
  SsObjective(TimeSeriesDataset data, SsNsgpModel model,
              DiscretizationScheme scheme = DiscretizationScheme::kExactOu);

  /// Value over the packed 3(T+1) vector; the gradient is O(T).
  /// Throws NumericalError naming the step index on non-finite terms.
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const;

  [[nodiscard]] const TimeSeriesDataset& data() const { return data_; }
  [[nodiscard]] const SsNsgpModel& model() const { return model_; }
  [[nodiscard]] DiscretizationScheme scheme() const { return scheme_; }
  [[nodiscard]] const Eigen::VectorXd& dt() const { return dt_; }

 private:
  TimeSeriesDataset data_;
  SsNsgpModel model_;
  DiscretizationScheme scheme_;
  Eigen::VectorXd dt_;
  Eigen::Matrix3d p0_inv_;
  double p0_logdet_ = 0.0;
};

[[nodiscard]] std::pair<double, SsLatent> ss_objective(
    const SsLatent& latent, const TimeSeriesDataset& data, const SsNsgpModel& model,
    DiscretizationScheme scheme = DiscretizationScheme::kExactOu);

/// One L1 block lambda * sum_k |psi z_k| on a linear functional of the state.
struct SsRegBlock {
  double lambda = 0.0;
  double rho = 1.0;
  Eigen::RowVector3d psi = Eigen::RowVector3d::Zero();
};

/// Blocks (f, ell, sigma); psi defaults to extracting the matching state
/// component. Regularization runs over k = 0..T inclusive.
struct SsRegConfig {
  SsRegBlock f{0.0, 1.0, Eigen::RowVector3d(1.0, 0.0, 0.0)};
  SsRegBlock ell{0.0, 1.0, Eigen::RowVector3d(0.0, 1.0, 0.0)};
  SsRegBlock sigma{0.0, 1.0, Eigen::RowVector3d(0.0, 0.0, 1.0)};

  [[nodiscard]] std::array<const SsRegBlock*, 3> blocks() const { return {&f, &ell, &sigma}; }
  void validate() const;
};

/// ADMM state in scaled-dual form: mu = eta / rho. Each constraint enters
/// the Lagrangian as rho mu^T r + (rho / 2) ||r||^2 with r = Psi z - w.
struct SsAdmmState {
  SsLatent latent;
  std::array<Eigen::VectorXd, 3> aux;
  std::array<Eigen::VectorXd, 3> dual;
  double initial_lagrangian = 0.0;
  std::vector<AdmmIterate> history;
  bool converged = false;
  bool lagrangian_monotone = true;

  [[nodiscard]] std::vector<double> lagrangian_sequence() const;
};

[[nodiscard]] double ss_augmented_lagrangian(
    const SsAdmmState& state, const TimeSeriesDataset& data, const SsNsgpModel& model,
    const SsRegConfig& reg, DiscretizationScheme scheme = DiscretizationScheme::kExactOu);

[[nodiscard]] SsAdmmState initial_ss_admm_state(const SsLatent& init, const SsRegConfig& reg);

[[nodiscard]] std::pair<SsLatent, SsAdmmState> ss_admm_fit(
    const TimeSeriesDataset& data, const SsNsgpModel& model, const SsRegConfig& reg,
    const SsLatent& init, const AdmmSettings& stop = {},
    DiscretizationScheme scheme = DiscretizationScheme::kExactOu);

/// Direct L-BFGS minimization of the sequential objective (no regularization).
[[nodiscard]] std::pair<SsLatent, OptimResult> ss_map_fit(
    const TimeSeriesDataset& data, const SsNsgpModel& model, const SsLatent& init,
    const LbfgsSettings& settings, DiscretizationScheme scheme = DiscretizationScheme::kExactOu);

[[nodiscard]] double ss_regularized_objective(const SsObjective& objective,
                                              const SsRegConfig& reg, const Eigen::VectorXd& z);

[[nodiscard]] SsLatent ss_subgradient_fit(
    const TimeSeriesDataset& data, const SsNsgpModel& model, const SsRegConfig& reg,
    const SsLatent& init, const SubgradientSettings& stop = {},
    DiscretizationScheme scheme = DiscretizationScheme::kExactOu);

}  // namespace rnsgp
