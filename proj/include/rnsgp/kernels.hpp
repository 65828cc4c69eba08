#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <functional>
#include <span>

namespace rnsgp {

enum class Smoothness { kHalf, kThreeHalves };

/// Matérn parameters in the Paciorek convention: the stationary limit is a
/// function of |tau| / sqrt(length_scale), i.e. `length_scale` behaves like a
/// squared length. For nu = 1/2 the covariance is
///   magnitude^2 * exp(-sqrt(2) |tau| / sqrt(length_scale)),
/// which equals an OU covariance with time constant sqrt(length_scale / 2).
struct MaternParams {
  Smoothness nu = Smoothness::kHalf;
  double length_scale = 1.0;
  double magnitude = 1.0;

  void validate() const;
};

[[nodiscard]] double stationary_matern(double tau, const MaternParams& p);

/// Non-stationary Matérn covariance between f(t) and f(t') with local
/// length-scales / magnitudes evaluated at the two inputs. The zero-lag value
/// is the analytic limit sigma(t)^2.
[[nodiscard]] double paciorek_nonstationary(double t, double tp, double ell_t, double ell_tp,
                                            double sigma_t, double sigma_tp, Smoothness nu);

/// Paciorek value together with d log(value) / d ell_t (for t != t').
struct PaciorekJet {
  double value = 0.0;
  double dlog_dell_t = 0.0;
  double dlog_dell_tp = 0.0;
};
[[nodiscard]] PaciorekJet paciorek_jet(double tau, double ell_t, double ell_tp, double sigma_t,
                                       double sigma_tp, Smoothness nu);

/// Conversion between the Paciorek nu=1/2 length-scale and the OU time
/// constant of the equivalent SDE: ell_paciorek = 2 * ell_ou^2.
[[nodiscard]] inline double paciorek_length_from_ou(double ell_ou) { return 2.0 * ell_ou * ell_ou; }

struct CovarianceMatrix {
  Eigen::MatrixXd entries;
  double jitter_applied = 0.0;
  Eigen::LLT<Eigen::MatrixXd> cholesky;
};

using CovarianceFn = std::function<double(double, double)>;

/// Assembles K_ij = kernel(t_i, t_j) + jitter * delta_ij and factorizes it.
/// Throws NumericalError if the jittered matrix is not positive definite.
[[nodiscard]] CovarianceMatrix build_cov_matrix(std::span<const double> times,
                                                const CovarianceFn& kernel, double jitter);

/// 1e-9 times the largest diagonal entry.
[[nodiscard]] double default_jitter(const Eigen::MatrixXd& m, double relative = 1e-9);

/// Stationary Matérn Gram matrix on `times`, relative jitter applied.
[[nodiscard]] CovarianceMatrix stationary_cov_matrix(const Eigen::VectorXd& times,
                                                     const MaternParams& p,
                                                     double relative_jitter = 1e-9);

}  // namespace rnsgp
