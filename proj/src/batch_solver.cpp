#include "rnsgp/batch_solver.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rnsgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::VectorXd segment(const Eigen::VectorXd& z, Eigen::Index block, Eigen::Index n) {
  return z.segment(block * n, n);
}

double block_penalty(const RegBlock& b, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                     const Eigen::VectorXd& eta) {
  const Eigen::VectorXd r = b.phi.apply(x) - v;
  return eta.dot(r) + 0.5 * b.rho * r.squaredNorm();
}

double lagrangian_value(const BatchObjective& obj, const RegConfig& reg, const Eigen::VectorXd& z,
                        const std::array<Eigen::VectorXd, 3>& aux,
                        const std::array<Eigen::VectorXd, 3>& dual) {
  const Eigen::Index n = obj.data().size();
  double value = obj.evaluate(z, nullptr);
  const auto blocks = reg.blocks();
  for (Eigen::Index b = 0; b < 3; ++b) {
    const auto& blk = *blocks[static_cast<size_t>(b)];
    value += blk.lambda * aux[static_cast<size_t>(b)].lpNorm<1>() +
             block_penalty(blk, segment(z, b, n), aux[static_cast<size_t>(b)],
                           dual[static_cast<size_t>(b)]);
  }
  return value;
}

}  // namespace

void BatchModelSpec::validate() const {
  if (!(u_length_scale > 0.0)) {
    throw std::invalid_argument("u_length_scale must be > 0");
  }
  if (!(u_magnitude > 0.0)) {
    throw std::invalid_argument("u_magnitude must be > 0");
  }
  if (!(jitter >= 0.0)) {
    throw std::invalid_argument("jitter must be >= 0");
  }
  if (ell_link.floor < 0.0 || sigma_link.floor < 0.0) {
    throw std::invalid_argument("link floor must be >= 0");
  }
}

Eigen::VectorXd BatchLatent::pack() const {
  Eigen::VectorXd z(3 * f.size());
  z << f, u_ell, u_sigma;
  return z;
}

BatchLatent BatchLatent::unpack(const Eigen::VectorXd& z) {
  if (z.size() % 3 != 0) {
    throw std::invalid_argument("BatchLatent::unpack: length not divisible by 3");
  }
  const Eigen::Index n = z.size() / 3;
  return {segment(z, 0, n), segment(z, 1, n), segment(z, 2, n)};
}

BatchLatent BatchLatent::initial(const TimeSeriesDataset& data) {
  const Eigen::Index n = data.size();
  return {data.values, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

BatchObjective::BatchObjective(TimeSeriesDataset data, BatchModelSpec spec)
    : data_(std::move(data)), spec_(std::move(spec)) {
  data_.validate();
  spec_.validate();
  const MaternParams up{spec_.u_nu, spec_.u_length_scale, spec_.u_magnitude};
  auto cu = stationary_cov_matrix(data_.times, up, spec_.jitter);
  prior_u_ = std::move(cu.cholesky);
  const double logdet = 2.0 * prior_u_.matrixLLT().diagonal().array().log().sum();
  prior_logdet_ = 2.0 * (logdet + static_cast<double>(data_.size()) * kLog2Pi);
}

Eigen::MatrixXd BatchObjective::covariance_f(const Eigen::VectorXd& u_ell,
                                             const Eigen::VectorXd& u_sigma) const {
  const Eigen::Index n = data_.size();
  Eigen::MatrixXd c(n, n);
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double li = spec_.ell_link.apply(u_ell[i]);
    const double si = spec_.sigma_link.apply(u_sigma[i]);
    c(i, i) = si * si;
    max_diag = std::max(max_diag, c(i, i));
    for (Eigen::Index j = 0; j < i; ++j) {
      const double lj = spec_.ell_link.apply(u_ell[j]);
      const double sj = spec_.sigma_link.apply(u_sigma[j]);
      c(i, j) = c(j, i) =
          paciorek_jet(data_.times[i] - data_.times[j], li, lj, si, sj, spec_.nu).value;
    }
  }
  c.diagonal().array() += spec_.jitter * max_diag;
  return c;
}

double BatchObjective::evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
  const Eigen::Index n = data_.size();
  if (z.size() != 3 * n) {
    throw std::invalid_argument("BatchObjective: latent has wrong length");
  }
  const auto f = z.segment(0, n);
  const auto ue = z.segment(n, n);
  const auto us = z.segment(2 * n, n);

  Eigen::VectorXd ell(n), dell(n), sig(n), dsig(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ell[i] = spec_.ell_link.apply(ue[i]);
    dell[i] = spec_.ell_link.deriv(ue[i], 1);
    sig[i] = spec_.sigma_link.apply(us[i]);
    dsig[i] = spec_.sigma_link.deriv(us[i], 1);
  }
  if (!ell.allFinite() || !sig.allFinite() || (ell.array() <= 0.0).any() ||
      (sig.array() <= 0.0).any()) {
    throw NumericalError("BatchObjective: link transform left the positive finite range");
  }

  // c holds the jitter-free kernel; dlog(i, j) = d log c(i, j) / d ell_i.
  Eigen::MatrixXd c(n, n);
  Eigen::MatrixXd dlog;
  if (grad != nullptr) {
    dlog.setZero(n, n);
  }
  Eigen::Index argmax = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = sig[i] * sig[i];
    if (c(i, i) > c(argmax, argmax)) {
      argmax = i;
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      const double tau = data_.times[i] - data_.times[j];
      const auto jet_i = paciorek_jet(tau, ell[i], ell[j], sig[i], sig[j], spec_.nu);
      c(i, j) = c(j, i) = jet_i.value;
      if (grad != nullptr) {
        dlog(i, j) = jet_i.dlog_dell_t;
        dlog(j, i) = jet_i.dlog_dell_tp;
      }
    }
  }
  const double jitter = spec_.jitter * c(argmax, argmax);
  Eigen::MatrixXd cj = c;
  cj.diagonal().array() += jitter;
  const Eigen::LLT<Eigen::MatrixXd> llt(cj);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("BatchObjective: C_f is not positive definite");
  }
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::VectorXd alpha = llt.solve(f);
  const Eigen::VectorXd resid = f - data_.values;
  const Eigen::VectorXd ce_ue = prior_u_.solve(ue);
  const Eigen::VectorXd cs_us = prior_u_.solve(us);

  const double value = resid.cwiseAbs2().cwiseQuotient(data_.noise_var).sum() + f.dot(alpha) +
                       logdet + static_cast<double>(n) * kLog2Pi + ue.dot(ce_ue) +
                       us.dot(cs_us) + prior_logdet_;
  if (!std::isfinite(value)) {
    throw NumericalError("BatchObjective: non-finite value");
  }

  if (grad != nullptr) {
    grad->resize(3 * n);
    grad->segment(0, n) = 2.0 * (alpha + resid.cwiseQuotient(data_.noise_var));
    // M = C^-1 - alpha alpha^T; trace[M dC/du_m] only touches row/column m.
    Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
    llt.matrixL().solveInPlace(linv);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
    m.selfadjointView<Eigen::Lower>().rankUpdate(alpha, -1.0);
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
    const Eigen::MatrixXd mc = m.cwiseProduct(c);
    const Eigen::VectorXd row_mc = mc.rowwise().sum();
    const Eigen::VectorXd row_mcd = mc.cwiseProduct(dlog).rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      (*grad)[n + i] = 2.0 * ce_ue[i] + 2.0 * dell[i] * row_mcd[i];
      (*grad)[2 * n + i] = 2.0 * cs_us[i] + 2.0 * dsig[i] / sig[i] * row_mc[i];
    }
    // The jitter scales with the largest sigma^2.
    (*grad)[2 * n + argmax] += spec_.jitter * 2.0 * sig[argmax] * dsig[argmax] * m.trace();
  }
  return value;
}

std::pair<double, Eigen::VectorXd> nsgp_objective(const BatchLatent& latent,
                                                  const TimeSeriesDataset& data,
                                                  const BatchModelSpec& spec) {
  const BatchObjective obj(data, spec);
  Eigen::VectorXd grad;
  const double v = obj.evaluate(latent.pack(), &grad);
  return {v, std::move(grad)};
}

std::vector<double> AdmmState::lagrangian_sequence() const {
  std::vector<double> seq;
  seq.reserve(history.size() + 1);
  seq.push_back(initial_lagrangian);
  for (const auto& h : history) {
    seq.push_back(h.lagrangian);
  }
  return seq;
}

double augmented_lagrangian(const AdmmState& state, const TimeSeriesDataset& data,
                            const BatchModelSpec& spec, const RegConfig& reg) {
  const BatchObjective obj(data, spec);
  return lagrangian_value(obj, reg, state.latent.pack(), state.aux, state.dual);
}

AdmmState initial_admm_state(const BatchLatent& init, const RegConfig& reg) {
  AdmmState state;
  state.latent = init;
  const std::array<const Eigen::VectorXd*, 3> x{&init.f, &init.u_ell, &init.u_sigma};
  const auto blocks = reg.blocks();
  for (size_t b = 0; b < 3; ++b) {
    state.aux[b] = blocks[b]->phi.apply(*x[b]);
    state.dual[b] = Eigen::VectorXd::Zero(x[b]->size());
  }
  return state;
}

std::pair<BatchLatent, AdmmState> admm_fit(const TimeSeriesDataset& data,
                                           const BatchModelSpec& spec, const RegConfig& reg,
                                           const BatchLatent& init, const AdmmSettings& stop) {
  const Eigen::Index n = data.size();
  reg.validate(n);
  if (init.f.size() != n || init.u_ell.size() != n || init.u_sigma.size() != n) {
    throw std::invalid_argument("admm_fit: initial latent does not match the dataset length");
  }
  if (!init.pack().allFinite()) {
    throw std::invalid_argument("admm_fit: initial latent must be finite");
  }
  const BatchObjective obj(data, spec);
  const auto blocks = reg.blocks();
  const double tol_primal = stop.tol_primal < 0.0 ? 1e-4 * std::sqrt(static_cast<double>(n))
                                                  : stop.tol_primal;
  const double tol_dual =
      stop.tol_dual < 0.0 ? 1e-4 * std::sqrt(static_cast<double>(n)) : stop.tol_dual;

  AdmmState state = initial_admm_state(init, reg);
  Eigen::VectorXd z = init.pack();
  state.initial_lagrangian = lagrangian_value(obj, reg, z, state.aux, state.dual);

  SmoothProblem sub;
  sub.dimension = 3 * n;
  sub.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    // The constant prior log-determinants are left out of the subproblem.
    double v = obj.evaluate(x, &g) - obj.prior_logdet();
    for (Eigen::Index b = 0; b < 3; ++b) {
      const auto& blk = *blocks[static_cast<size_t>(b)];
      if (!(blk.lambda > 0.0)) {
        continue;
      }
      const auto& vb = state.aux[static_cast<size_t>(b)];
      const auto& eb = state.dual[static_cast<size_t>(b)];
      const Eigen::VectorXd r = blk.phi.apply(x.segment(b * n, n)) - vb;
      v += eb.dot(r) + 0.5 * blk.rho * r.squaredNorm();
      g.segment(b * n, n) += blk.phi.apply_transpose(eb + blk.rho * r);
    }
    return v;
  };

  for (int it = 0; it < stop.max_outer; ++it) {
    try {
      z = minimize_smooth(sub, z, stop.inner).minimizer;
    } catch (const NumericalError& e) {
      throw NumericalError("admm_fit: z-subproblem failed at outer iteration " +
                           std::to_string(it) + ": " + e.what());
    }
    AdmmIterate rec;
    for (Eigen::Index b = 0; b < 3; ++b) {
      const auto& blk = *blocks[static_cast<size_t>(b)];
      auto& vb = state.aux[static_cast<size_t>(b)];
      auto& eb = state.dual[static_cast<size_t>(b)];
      const Eigen::VectorXd px = blk.phi.apply(z.segment(b * n, n));
      if (!(blk.lambda > 0.0)) {
        // Unregularized blocks are not split: v tracks Phi x exactly.
        vb = px;
        continue;
      }
      Eigen::VectorXd v_new = soft_threshold(px + eb / blk.rho, blk.lambda / blk.rho);
      rec.dual_residual = std::max(rec.dual_residual, blk.rho * (v_new - vb).norm());
      vb = std::move(v_new);
      const Eigen::VectorXd r = px - vb;
      eb += blk.rho * r;
      rec.primal_residual = std::max(rec.primal_residual, r.norm());
    }
    rec.lagrangian = lagrangian_value(obj, reg, z, state.aux, state.dual);
    if (!std::isfinite(rec.lagrangian)) {
      throw NumericalError("admm_fit: non-finite Lagrangian at outer iteration " +
                           std::to_string(it));
    }
    state.history.push_back(rec);
    if (rec.primal_residual <= tol_primal && rec.dual_residual <= tol_dual) {
      state.converged = true;
      break;
    }
  }

  state.latent = BatchLatent::unpack(z);
  state.lagrangian_monotone = is_non_increasing(state.lagrangian_sequence(), stop.monotone_slack);
  return {state.latent, std::move(state)};
}

double regularized_objective(const BatchObjective& objective, const RegConfig& reg,
                             const Eigen::VectorXd& z) {
  const Eigen::Index n = objective.data().size();
  double v = objective.evaluate(z, nullptr);
  const auto blocks = reg.blocks();
  for (Eigen::Index b = 0; b < 3; ++b) {
    const auto& blk = *blocks[static_cast<size_t>(b)];
    if (blk.lambda > 0.0) {
      v += blk.lambda * blk.phi.apply(z.segment(b * n, n)).lpNorm<1>();
    }
  }
  return v;
}

BatchLatent subgradient_fit(const TimeSeriesDataset& data, const BatchModelSpec& spec,
                            const RegConfig& reg, const BatchLatent& init,
                            const SubgradientSettings& stop) {
  const Eigen::Index n = data.size();
  reg.validate(n);
  const BatchObjective obj(data, spec);
  const auto blocks = reg.blocks();
  const SmoothObjective full = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    double v = obj.evaluate(x, &g);
    for (Eigen::Index b = 0; b < 3; ++b) {
      const auto& blk = *blocks[static_cast<size_t>(b)];
      if (blk.lambda > 0.0) {
        const Eigen::VectorXd xb = x.segment(b * n, n);
        v += blk.lambda * blk.phi.apply(xb).lpNorm<1>();
        g.segment(b * n, n) += l1_subgradient(blk, xb);
      }
    }
    return v;
  };
  return BatchLatent::unpack(subgradient_descent(full, init.pack(), stop));
}

}  // namespace rnsgp

namespace rnsgp {

std::pair<BatchLatent, OptimResult> map_fit(const TimeSeriesDataset& data,
                                            const BatchModelSpec& spec, const BatchLatent& init,
                                            const LbfgsSettings& settings) {
  const BatchObjective obj(data, spec);
  SmoothProblem p;
  p.dimension = 3 * data.size();
  p.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return obj.evaluate(x, &g); };
  OptimResult r = minimize_smooth(p, init.pack(), settings);
  return {BatchLatent::unpack(r.minimizer), std::move(r)};
}

}  // namespace rnsgp
