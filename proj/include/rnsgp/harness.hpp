#pragma once

#include "rnsgp/batch_solver.hpp"
#include "rnsgp/dataset.hpp"
#include "rnsgp/inference.hpp"
#include "rnsgp/regularization.hpp"
#include "rnsgp/statespace_solver.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rnsgp {

enum class Method { kGp, kNsgp, kRNsgpGd, kRNsgpAdmm, kSsNsgp, kRSsNsgpGd, kRSsNsgpAdmm };

inline constexpr std::array<Method, 7> kAllMethods{
    Method::kGp,        Method::kNsgp,      Method::kRNsgpGd,    Method::kRNsgpAdmm,
    Method::kSsNsgp,    Method::kRSsNsgpGd, Method::kRSsNsgpAdmm};

[[nodiscard]] std::string_view method_name(Method m);
/// Accepts "gp", "nsgp", "r-nsgp-gd", "r-nsgp-admm", "ss-nsgp", "r-ss-nsgp-gd",
/// "r-ss-nsgp-admm". Throws std::invalid_argument otherwise.
[[nodiscard]] Method parse_method(std::string_view name);
[[nodiscard]] bool is_admm(Method m);
[[nodiscard]] bool is_state_space(Method m);

/// 0 on [0, 1/3), 1 on [1/3, 2/3), 0.5 on [2/3, 1).
[[nodiscard]] double rectangular_signal(double t);

struct SyntheticData {
  TimeSeriesDataset data;
  Eigen::VectorXd truth;
};

/// t_k = (k - 1) / T, y_k = f(t_k) + N(0, noise_var) from CounterRng(seed, stream).
/// Stream 0 is the training draw; other streams give independent redraws of
/// the noise on the same grid.
[[nodiscard]] SyntheticData make_rectangular_dataset(int steps, double noise_var,
                                                     std::uint64_t seed,
                                                     std::uint64_t stream = 0);

/// Model, regularization and solver settings shared by all methods.
struct MethodSettings {
  BatchModelSpec batch;
  RegConfig batch_reg;
  SsNsgpModel ss;
  SsRegConfig ss_reg;
  DiscretizationScheme scheme = DiscretizationScheme::kExactOu;
  AdmmSettings admm;
  SubgradientSettings subgradient;
  /// Direct minimization for the unregularized rows.
  LbfgsSettings map{.tol_grad = 1e-6, .max_iters = 5000};
  Smoothness gp_nu = Smoothness::kHalf;

  /// Batch lambda_ell = lambda_sigma = 18, rho = 150; state-space
  /// lambda_ell = lambda_sigma = 8, rho = 50; lambda_f = 0.
  static MethodSettings defaults();
};

struct FitOutput {
  Eigen::VectorXd f_hat;
  Eigen::VectorXd u_ell_hat;
  Eigen::VectorXd u_sigma_hat;
  std::optional<PosteriorMarginal> marginal;
  /// Final objective: L + L_REG for regularized methods, NLML for gp.
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double initial_lagrangian = 0.0;
  std::vector<AdmmIterate> history;
  bool converged = true;
  bool lagrangian_monotone = true;
};

/// Fits one method; NSGP rows use the same objectives with lambda = 0.
[[nodiscard]] FitOutput fit_method(Method method, const TimeSeriesDataset& data,
                                   const MethodSettings& settings, bool with_uq);

enum class NlpdTarget { kTraining, kHeldOut };

struct ExperimentConfig {
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  MethodSettings settings = MethodSettings::defaults();
  int runs = 100;
  std::uint64_t seed = 0;
  int steps = 100;
  double noise_var = 0.002;
  bool uq = true;
  NlpdTarget nlpd_target = NlpdTarget::kTraining;
  /// 0 picks the hardware concurrency.
  int threads = 0;
  /// Keep the replicate-0 estimates of every method for trace output.
  bool keep_traces = false;

  void validate() const;
};

struct MethodSummary {
  Method method = Method::kGp;
  int runs = 0;
  int failures = 0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  /// NaN when UQ is off.
  double uq_rmse_mean = 0.0;
  double uq_rmse_std = 0.0;
  double nlpd_mean = 0.0;
  double nlpd_std = 0.0;
};

struct Trace {
  Method method = Method::kGp;
  Eigen::VectorXd t;
  Eigen::VectorXd y;
  /// NaN entries when the truth is unknown.
  Eigen::VectorXd f_true;
  Eigen::VectorXd f_hat;
  Eigen::VectorXd u_ell_hat;
  Eigen::VectorXd u_sigma_hat;
  /// NaN entries when no marginal was computed.
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

[[nodiscard]] Trace make_trace(Method method, const TimeSeriesDataset& data,
                               const Eigen::VectorXd& truth, const FitOutput& fit);

struct ResultTable {
  std::uint64_t seed = 0;
  std::vector<MethodSummary> rows;
  std::vector<Trace> traces;

  /// Throws std::out_of_range if the method was not run.
  [[nodiscard]] const MethodSummary& row(Method m) const;
};

/// Monte-Carlo runner. Replicate r uses seed + r; replicates run in parallel
/// and are reduced in replicate order, so results do not depend on the
/// thread count. Throws std::runtime_error if more than 10% of a method's
/// replicates fail.
[[nodiscard]] ResultTable run_experiment(const ExperimentConfig& config);

/// Writes results.csv and, when `with_traces`, trace_<method>.csv to `dir`.
/// Throws std::runtime_error if a file cannot be written.
void emit_results(const ResultTable& table, const std::filesystem::path& dir, bool with_traces);

void write_trace_csv(const Trace& trace, const std::filesystem::path& file);

/// Aligned plain-text rendering of the table.
[[nodiscard]] std::string format_table(const ResultTable& table);

}  // namespace rnsgp
