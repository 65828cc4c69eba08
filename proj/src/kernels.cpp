#include "rnsgp/kernels.hpp"

#include "rnsgp/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace rnsgp {

namespace {

double nu_value(Smoothness nu) { return nu == Smoothness::kHalf ? 0.5 : 1.5; }

// z^nu K_nu(z) / (Gamma(nu) 2^(nu-1)) for the two half-integer orders.
double matern_shape(double z, Smoothness nu) {
  switch (nu) {
    case Smoothness::kHalf:
      return std::exp(-z);
    case Smoothness::kThreeHalves:
      return (1.0 + z) * std::exp(-z);
  }
  return 0.0;
}

// d log(shape) / dz
double matern_shape_dlog(double z, Smoothness nu) {
  switch (nu) {
    case Smoothness::kHalf:
      return -1.0;
    case Smoothness::kThreeHalves:
      return -z / (1.0 + z);
  }
  return 0.0;
}

}  // namespace

void MaternParams::validate() const {
  if (!(length_scale > 0.0) || !(magnitude > 0.0)) {
    throw std::domain_error("MaternParams: length_scale and magnitude must be positive");
  }
}

double stationary_matern(double tau, const MaternParams& p) {
  const double z = 2.0 * std::sqrt(nu_value(p.nu)) * std::abs(tau) / std::sqrt(p.length_scale);
  return p.magnitude * p.magnitude * matern_shape(z, p.nu);
}

PaciorekJet paciorek_jet(double tau, double ell_t, double ell_tp, double sigma_t,
                         double sigma_tp, Smoothness nu) {
  if (!(ell_t > 0.0) || !(ell_tp > 0.0) || !(sigma_t > 0.0) || !(sigma_tp > 0.0)) {
    throw std::domain_error("paciorek_nonstationary: length-scales and magnitudes must be positive");
  }
  const double mean_ell = 0.5 * (ell_t + ell_tp);
  const double z = 2.0 * std::sqrt(nu_value(nu)) * std::abs(tau) / std::sqrt(mean_ell);
  const double prefactor =
      sigma_t * sigma_tp * std::sqrt(std::sqrt(ell_t * ell_tp)) / std::sqrt(mean_ell);
  PaciorekJet jet;
  jet.value = prefactor * matern_shape(z, nu);
  const double shared = -0.25 / mean_ell - matern_shape_dlog(z, nu) * z / (4.0 * mean_ell);
  jet.dlog_dell_t = 0.25 / ell_t + shared;
  jet.dlog_dell_tp = 0.25 / ell_tp + shared;
  return jet;
}

double paciorek_nonstationary(double t, double tp, double ell_t, double ell_tp, double sigma_t,
                              double sigma_tp, Smoothness nu) {
  if (t == tp) {
    if (!(ell_t > 0.0) || !(ell_tp > 0.0) || !(sigma_t > 0.0) || !(sigma_tp > 0.0)) {
      throw std::domain_error(
          "paciorek_nonstationary: length-scales and magnitudes must be positive");
    }
    // Same input means the same local parameters; sigma(t)^2 is the analytic limit.
    if (ell_t == ell_tp) {
      return sigma_t * sigma_tp;
    }
  }
  return paciorek_jet(t - tp, ell_t, ell_tp, sigma_t, sigma_tp, nu).value;
}

double default_jitter(const Eigen::MatrixXd& m, double relative) {
  return m.size() == 0 ? 0.0 : relative * m.diagonal().maxCoeff();
}

CovarianceMatrix build_cov_matrix(std::span<const double> times, const CovarianceFn& kernel,
                                  double jitter) {
  if (jitter < 0.0) {
    throw std::invalid_argument("build_cov_matrix: jitter must be nonnegative");
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("build_cov_matrix: times must be strictly increasing");
    }
  }
  CovarianceMatrix out;
  out.entries.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.entries(i, i) = kernel(times[i], times[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = kernel(times[i], times[j]);
      out.entries(i, j) = k;
      out.entries(j, i) = k;
    }
  }
  out.entries.diagonal().array() += jitter;
  out.jitter_applied = jitter;
  out.cholesky.compute(out.entries);
  if (out.cholesky.info() != Eigen::Success) {
    throw NumericalError("build_cov_matrix: matrix is not positive definite after jitter");
  }
  return out;
}

CovarianceMatrix stationary_cov_matrix(const Eigen::VectorXd& times, const MaternParams& p,
                                       double relative_jitter) {
  p.validate();
  const double jitter = relative_jitter * p.magnitude * p.magnitude;
  return build_cov_matrix(std::span<const double>(times.data(), static_cast<size_t>(times.size())),
                          [&p](double a, double b) { return stationary_matern(a - b, p); },
                          jitter);
}

}  // namespace rnsgp
