#include "rnsgp/inference.hpp"

#include "rnsgp/optimizer.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rnsgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Posterior of f ~ N(0, C), y = f + N(0, diag(R)) at the observed points.
PosteriorMarginal regression_posterior(const Eigen::MatrixXd& c, const TimeSeriesDataset& data) {
  Eigen::MatrixXd k = c;
  k.diagonal() += data.noise_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("marginal UQ: C + R is not positive definite");
  }
  PosteriorMarginal out;
  out.times = data.times;
  out.mean = c * llt.solve(data.values);
  const Eigen::MatrixXd half = llt.matrixL().solve(c);
  out.variance = (c.diagonal() - half.colwise().squaredNorm().transpose()).cwiseMax(0.0);
  return out;
}

double shape_dlog(double z, Smoothness nu) {
  return nu == Smoothness::kHalf ? -1.0 : -z / (1.0 + z);
}

double nu_value(Smoothness nu) { return nu == Smoothness::kHalf ? 0.5 : 1.5; }

}  // namespace

void PosteriorMarginal::validate() const {
  if (times.size() != mean.size() || mean.size() != variance.size()) {
    throw std::invalid_argument("PosteriorMarginal: lengths differ");
  }
  if ((variance.array() < 0.0).any()) {
    throw std::invalid_argument("PosteriorMarginal: negative variance");
  }
}

PosteriorMarginal batch_marginal_uq(const BatchLatent& map_latent, const TimeSeriesDataset& data,
                                    const BatchModelSpec& spec) {
  data.validate();
  if (map_latent.size() != data.size()) {
    throw std::invalid_argument("batch_marginal_uq: latent length differs from data");
  }
  if (!map_latent.pack().allFinite()) {
    throw std::invalid_argument("batch_marginal_uq: latent must be finite");
  }
  const BatchObjective obj(data, spec);
  return regression_posterior(obj.covariance_f(map_latent.u_ell, map_latent.u_sigma), data);
}

ScalarSmootherResult scalar_kalman_rts(const Eigen::VectorXd& factors,
                                       const Eigen::VectorXd& process_var, double p0,
                                       const Eigen::VectorXd& y, const Eigen::VectorXd& noise_var) {
  const Eigen::Index n = y.size();
  if (factors.size() != n || process_var.size() != n || noise_var.size() != n) {
    throw std::invalid_argument("scalar_kalman_rts: lengths differ");
  }
  ScalarSmootherResult r;
  r.filtered_mean.resize(n);
  r.filtered_variance.resize(n);
  Eigen::VectorXd pred_mean(n), pred_var(n);
  double m = 0.0;
  double p = p0;
  for (Eigen::Index k = 0; k < n; ++k) {
    pred_mean[k] = factors[k] * m;
    pred_var[k] = factors[k] * factors[k] * p + process_var[k];
    const double s = pred_var[k] + noise_var[k];
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw NumericalError("scalar_kalman_rts: non-positive innovation variance at step " +
                           std::to_string(k + 1));
    }
    const double gain = pred_var[k] / s;
    m = pred_mean[k] + gain * (y[k] - pred_mean[k]);
    p = (1.0 - gain) * pred_var[k];
    r.filtered_mean[k] = m;
    r.filtered_variance[k] = p;
  }
  r.smoothed_mean = r.filtered_mean;
  r.smoothed_variance = r.filtered_variance;
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    const double g = r.filtered_variance[k] * factors[k + 1] / pred_var[k + 1];
    r.smoothed_mean[k] += g * (r.smoothed_mean[k + 1] - pred_mean[k + 1]);
    r.smoothed_variance[k] += g * g * (r.smoothed_variance[k + 1] - pred_var[k + 1]);
  }
  return r;
}

PosteriorMarginal ss_marginal_uq(const SsLatent& map_latent, const TimeSeriesDataset& data,
                                 const SsNsgpModel& model, DiscretizationScheme scheme) {
  data.validate();
  model.validate();
  const Eigen::Index n = data.size();
  if (map_latent.states.rows() != n + 1) {
    throw std::invalid_argument("ss_marginal_uq: latent must have T + 1 states");
  }
  if (!map_latent.states.allFinite()) {
    throw std::invalid_argument("ss_marginal_uq: latent must be finite");
  }
  const Eigen::VectorXd dt = step_sizes(data.times);
  Eigen::VectorXd factors(n), q(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const TransitionJet j =
        transition_jet(map_latent.states(k, 1), map_latent.states(k, 2), dt[k], model, scheme);
    factors[k] = j.f_factor;
    q[k] = j.q_f;
  }
  const ScalarSmootherResult r =
      scalar_kalman_rts(factors, q, model.initial_covariance()(0, 0), data.values, data.noise_var);
  PosteriorMarginal out;
  out.times = data.times;
  out.mean = r.smoothed_mean;
  out.variance = r.smoothed_variance.cwiseMax(0.0);
  return out;
}

double gp_nlml(const TimeSeriesDataset& data, Smoothness nu, double log_ell, double log_sigma,
               Eigen::Vector2d* grad) {
  const Eigen::Index n = data.size();
  const MaternParams params{nu, std::exp(log_ell), std::exp(log_sigma)};
  const CovarianceMatrix cov = stationary_cov_matrix(data.times, params);
  Eigen::MatrixXd k = cov.entries;
  k.diagonal() += data.noise_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("gp_nlml: C + R is not positive definite");
  }
  const Eigen::VectorXd alpha = llt.solve(data.values);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double value = data.values.dot(alpha) + logdet + static_cast<double>(n) * kLog2Pi;
  if (grad != nullptr) {
    // d/dtheta = tr((K^-1 - alpha alpha^T) dK/dtheta)
    const Eigen::MatrixXd m =
        llt.solve(Eigen::MatrixXd::Identity(n, n)) - alpha * alpha.transpose();
    const double scale = 2.0 * std::sqrt(nu_value(nu)) / std::sqrt(params.length_scale);
    double g_ell = 0.0;
    double g_sigma = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double z = scale * std::abs(data.times[i] - data.times[j]);
        const double c = cov.entries(i, j) - (i == j ? cov.jitter_applied : 0.0);
        g_ell += m(i, j) * c * (-shape_dlog(z, nu)) * 0.5 * z;
        g_sigma += m(i, j) * 2.0 * cov.entries(i, j);
      }
    }
    *grad = Eigen::Vector2d(g_ell, g_sigma);
  }
  return value;
}

GpMleResult gp_mle_fit(const TimeSeriesDataset& data, Smoothness nu) {
  data.validate();
  SmoothProblem p;
  p.dimension = 2;
  p.lower = Eigen::Vector2d::Constant(-15.0);
  p.upper = Eigen::Vector2d::Constant(15.0);
  p.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    Eigen::Vector2d g2;
    const double v = gp_nlml(data, nu, x[0], x[1], &g2);
    g = g2;
    return v;
  };
  LbfgsSettings settings;
  settings.tol_grad = 1e-6;
  settings.max_iters = 500;

  constexpr std::array<double, 3> kLogEll{-3.0, 0.0, 3.0};
  constexpr std::array<double, 3> kLogSigma{-2.0, 0.0, 1.0};
  GpMleResult best;
  best.nlml = std::numeric_limits<double>::infinity();
  for (const double le : kLogEll) {
    for (const double ls : kLogSigma) {
      try {
        const OptimResult r = minimize_smooth(p, Eigen::Vector2d(le, ls), settings);
        if (std::isfinite(r.value) && r.value < best.nlml) {
          best = {std::exp(r.minimizer[0]), std::exp(r.minimizer[1]), r.value};
        }
      } catch (const NumericalError&) {
        // try the next start
      }
    }
  }
  if (!std::isfinite(best.nlml)) {
    throw NumericalError("gp_mle_fit: every start failed");
  }
  return best;
}

PosteriorMarginal gp_posterior(const TimeSeriesDataset& data, Smoothness nu, double length_scale,
                               double magnitude) {
  data.validate();
  const CovarianceMatrix cov =
      stationary_cov_matrix(data.times, MaternParams{nu, length_scale, magnitude});
  return regression_posterior(cov.entries, data);
}

double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  if (estimate.size() == 0) {
    return 0.0;
  }
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(estimate.size()));
}

double nlpd(const PosteriorMarginal& marginal, const Eigen::VectorXd& test_values,
            const Eigen::VectorXd& noise_var) {
  const Eigen::Index n = marginal.mean.size();
  if (test_values.size() != n || noise_var.size() != n || marginal.variance.size() != n) {
    throw std::invalid_argument("nlpd: length mismatch");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = marginal.variance[k] + noise_var[k];
    if (!(v > 0.0)) {
      throw std::invalid_argument("nlpd: total variance must be positive at index " +
                                  std::to_string(k));
    }
    const double r = test_values[k] - marginal.mean[k];
    total += 0.5 * (kLog2Pi + std::log(v) + r * r / v);
  }
  return total;
}

}  // namespace rnsgp
