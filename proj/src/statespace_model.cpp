#include "rnsgp/statespace_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rnsgp {

Eigen::Matrix3d SsNsgpModel::initial_covariance() const {
  if (p0) {
    return *p0;
  }
  const double sf = sigma_link.apply(0.0);
  const double su2 = u_magnitude * u_magnitude;
  return Eigen::Vector3d(sf * sf, su2, su2).asDiagonal();
}

void SsNsgpModel::validate() const {
  if (!(u_length_scale > 0.0)) {
    throw std::invalid_argument("u_length_scale must be > 0");
  }
  if (!(u_magnitude > 0.0)) {
    throw std::invalid_argument("u_magnitude must be > 0");
  }
  if (p0) {
    const Eigen::Matrix3d& p = *p0;
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("p0 must be symmetric");
    }
    if (Eigen::LLT<Eigen::Matrix3d>(p).info() != Eigen::Success) {
      throw std::invalid_argument("p0 must be positive definite");
    }
  }
}

DriftDiffusion sde_drift_diffusion(const Eigen::Vector3d& z, const SsNsgpModel& model) {
  const double ell = model.ell_link.apply(z[1]);
  const double sig = model.sigma_link.apply(z[2]);
  const double bu = std::numbers::sqrt2 * model.u_magnitude / std::sqrt(model.u_length_scale);
  DriftDiffusion out;
  out.drift << -z[0] / ell, -z[1] / model.u_length_scale, -z[2] / model.u_length_scale;
  out.diffusion << std::numbers::sqrt2 * sig / std::sqrt(ell), bu, bu;
  return out;
}

TransitionJet transition_jet(double u_ell, double u_sigma, double dt, const SsNsgpModel& model,
                             DiscretizationScheme scheme) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("discretize: dt must be positive");
  }
  const double ell = model.ell_link.apply(u_ell);
  const double dell = model.ell_link.deriv(u_ell, 1);
  const double sig = model.sigma_link.apply(u_sigma);
  const double dsig = model.sigma_link.deriv(u_sigma, 1);
  const double lu = model.u_length_scale;
  const double su2 = model.u_magnitude * model.u_magnitude;

  TransitionJet j;
  switch (scheme) {
    case DiscretizationScheme::kExactOu: {
      // OU with time constant ell and stationary variance sig^2, frozen over the step.
      const double e = std::exp(-dt / ell);
      const double de_dell = e * dt / (ell * ell);
      const double one_minus_e2 = -std::expm1(-2.0 * dt / ell);
      j.f_factor = e;
      j.df_factor_du_ell = de_dell * dell;
      j.q_f = sig * sig * one_minus_e2;
      j.dq_f_du_ell = -sig * sig * 2.0 * e * de_dell * dell;
      j.dq_f_du_sigma = 2.0 * sig * dsig * one_minus_e2;
      j.u_factor = std::exp(-dt / lu);
      j.q_u = su2 * -std::expm1(-2.0 * dt / lu);
      break;
    }
    case DiscretizationScheme::kEulerMaruyama: {
      j.f_factor = 1.0 - dt / ell;
      j.df_factor_du_ell = dt / (ell * ell) * dell;
      j.q_f = 2.0 * sig * sig * dt / ell;
      j.dq_f_du_ell = -2.0 * sig * sig * dt / (ell * ell) * dell;
      j.dq_f_du_sigma = 4.0 * sig * dsig * dt / ell;
      j.u_factor = 1.0 - dt / lu;
      j.q_u = 2.0 * su2 * dt / lu;
      break;
    }
  }
  return j;
}

DiscreteTransition discretize(const Eigen::Vector3d& z_prev, double dt, const SsNsgpModel& model,
                              DiscretizationScheme scheme) {
  const TransitionJet j = transition_jet(z_prev[1], z_prev[2], dt, model, scheme);
  DiscreteTransition out;
  out.dt = dt;
  out.mean << j.f_factor * z_prev[0], j.u_factor * z_prev[1], j.u_factor * z_prev[2];
  out.cov << j.q_f, j.q_u, j.q_u;
  return out;
}

Eigen::VectorXd step_sizes(const Eigen::VectorXd& times) {
  const Eigen::Index n = times.size();
  Eigen::VectorXd dt(n);
  if (n == 0) {
    return dt;
  }
  dt[0] = n >= 2 ? times[1] - times[0] : 1.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    dt[k] = times[k] - times[k - 1];
  }
  return dt;
}

double implied_covariance(const PathFn& u_ell, const PathFn& u_sigma, double t, double tp,
                          double t0, double prior_var, const SsNsgpModel& model, int nodes) {
  if (nodes <= 0) {
    throw std::invalid_argument("implied_covariance: node count must be positive");
  }
  if (t < t0 || tp < t0) {
    throw std::invalid_argument("implied_covariance: t and t' must not precede t0");
  }
  const double lo = std::min(t, tp);
  const double hi = std::max(t, tp);
  const int n = std::max(3, nodes % 2 == 0 ? nodes + 1 : nodes);
  const auto rate = [&](double s) { return 1.0 / model.ell_link.apply(u_ell(s)); };
  const auto simpson_step = [&](double a, double b) {
    return (b - a) / 6.0 * (rate(a) + 4.0 * rate(0.5 * (a + b)) + rate(b));
  };

  // Cumulative integral of the rate from t0 on the quadrature grid over [t0, lo].
  const double h = (lo - t0) / (n - 1);
  std::vector<double> grid(static_cast<size_t>(n));
  std::vector<double> cum(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    grid[static_cast<size_t>(i)] = t0 + h * i;
    if (i > 0) {
      cum[static_cast<size_t>(i)] =
          cum[static_cast<size_t>(i - 1)] +
          simpson_step(grid[static_cast<size_t>(i - 1)], grid[static_cast<size_t>(i)]);
    }
  }
  const double int_lo = cum.back();
  // Rate integral over [lo, hi] on its own Simpson grid.
  double int_gap = 0.0;
  if (hi > lo) {
    const double hg = (hi - lo) / (n - 1);
    for (int i = 1; i < n; ++i) {
      int_gap += simpson_step(lo + hg * (i - 1), lo + hg * i);
    }
  }
  const double int_hi = int_lo + int_gap;

  const double prior_term = std::exp(-(int_lo + int_hi)) * prior_var;
  if (h == 0.0) {
    return prior_term;
  }
  // Lambda(t, s) Lambda(t', s) B(s)^2 = exp(-(I(lo) - I(s)) - (I(hi) - I(s))) B(s)^2.
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = grid[static_cast<size_t>(i)];
    const double ell = model.ell_link.apply(u_ell(s));
    const double sig = model.sigma_link.apply(u_sigma(s));
    const double b2 = 2.0 * sig * sig / ell;
    const double weight = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += weight * std::exp(-(int_lo - cum[static_cast<size_t>(i)]) -
                             (int_hi - cum[static_cast<size_t>(i)])) *
           b2;
  }
  return prior_term + acc * h / 3.0;
}

}  // namespace rnsgp
