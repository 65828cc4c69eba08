#include "rnsgp/statespace_solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rnsgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Psi applied to every state: (Psi z_k)_{k=0..T}.
Eigen::VectorXd apply_psi(const SsRegBlock& b, const Eigen::VectorXd& z) {
  const Eigen::Index rows = z.size() / 3;
  const Eigen::Map<const StateMatrix> s(z.data(), rows, 3);
  return s * b.psi.transpose();
}

// Adds c_k * psi to the gradient row k.
void add_psi_transpose(const SsRegBlock& b, const Eigen::VectorXd& c, Eigen::VectorXd& g) {
  const Eigen::Index rows = g.size() / 3;
  Eigen::Map<StateMatrix> gm(g.data(), rows, 3);
  gm.noalias() += c * b.psi;
}

double ss_lagrangian_value(const SsObjective& obj, const SsRegConfig& reg,
                           const Eigen::VectorXd& z, const std::array<Eigen::VectorXd, 3>& aux,
                           const std::array<Eigen::VectorXd, 3>& dual) {
  double value = obj.evaluate(z, nullptr);
  const auto blocks = reg.blocks();
  for (size_t b = 0; b < 3; ++b) {
    const auto& blk = *blocks[b];
    const Eigen::VectorXd r = apply_psi(blk, z) - aux[b];
    value += blk.lambda * aux[b].lpNorm<1>() + blk.rho * dual[b].dot(r) +
             0.5 * blk.rho * r.squaredNorm();
  }
  return value;
}

}  // namespace

Eigen::VectorXd SsLatent::pack() const {
  return Eigen::Map<const Eigen::VectorXd>(states.data(), states.size());
}

SsLatent SsLatent::unpack(const Eigen::VectorXd& z) {
  if (z.size() % 3 != 0) {
    throw std::invalid_argument("SsLatent::unpack: length not divisible by 3");
  }
  SsLatent out;
  out.states = Eigen::Map<const StateMatrix>(z.data(), z.size() / 3, 3);
  return out;
}

SsLatent SsLatent::initial(const TimeSeriesDataset& data) {
  const Eigen::Index n = data.size();
  SsLatent out;
  out.states = StateMatrix::Zero(n + 1, 3);
  out.states.col(0).tail(n) = data.values;
  out.states(0, 0) = data.values[0];
  return out;
}

SsObjective::SsObjective(TimeSeriesDataset data, SsNsgpModel model, DiscretizationScheme scheme)
    : data_(std::move(data)), model_(std::move(model)), scheme_(scheme) {
  data_.validate();
  model_.validate();
  dt_ = step_sizes(data_.times);
  const Eigen::Matrix3d p0 = model_.initial_covariance();
  const Eigen::LLT<Eigen::Matrix3d> llt(p0);
  p0_inv_ = llt.solve(Eigen::Matrix3d::Identity());
  p0_logdet_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum() + 3.0 * kLog2Pi;
}

double SsObjective::evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
  const Eigen::Index n = data_.size();
  if (z.size() != 3 * (n + 1)) {
    throw std::invalid_argument("SsObjective: latent has wrong length");
  }
  const Eigen::Map<const StateMatrix> s(z.data(), n + 1, 3);
  const Eigen::Vector3d z0 = s.row(0).transpose();
  double value = z0.dot(p0_inv_ * z0) + p0_logdet_;

  StateMatrix g;
  if (grad != nullptr) {
    g = StateMatrix::Zero(n + 1, 3);
    g.row(0) = (2.0 * p0_inv_ * z0).transpose();
  }

  for (Eigen::Index k = 1; k <= n; ++k) {
    const double f_prev = s(k - 1, 0);
    const double a_prev = s(k - 1, 1);
    const double b_prev = s(k - 1, 2);
    const TransitionJet j = transition_jet(a_prev, b_prev, dt_[k - 1], model_, scheme_);
    const double meas = data_.values[k - 1] - s(k, 0);
    const double rf = s(k, 0) - j.f_factor * f_prev;
    const double r1 = s(k, 1) - j.u_factor * a_prev;
    const double r2 = s(k, 2) - j.u_factor * b_prev;
    const double term = meas * meas / data_.noise_var[k - 1] + rf * rf / j.q_f +
                        (r1 * r1 + r2 * r2) / j.q_u + std::log(j.q_f) + 2.0 * std::log(j.q_u) +
                        3.0 * kLog2Pi;
    if (!std::isfinite(term) || !(j.q_f > 0.0)) {
      throw NumericalError("SsObjective: non-finite transition term at step " + std::to_string(k));
    }
    value += term;

    if (grad != nullptr) {
      g(k, 0) += -2.0 * meas / data_.noise_var[k - 1] + 2.0 * rf / j.q_f;
      g(k, 1) += 2.0 * r1 / j.q_u;
      g(k, 2) += 2.0 * r2 / j.q_u;
      const double dlogq = 1.0 / j.q_f - rf * rf / (j.q_f * j.q_f);
      g(k - 1, 0) += -2.0 * rf * j.f_factor / j.q_f;
      g(k - 1, 1) += -2.0 * rf * f_prev * j.df_factor_du_ell / j.q_f + dlogq * j.dq_f_du_ell -
                     2.0 * r1 * j.u_factor / j.q_u;
      g(k - 1, 2) += dlogq * j.dq_f_du_sigma - 2.0 * r2 * j.u_factor / j.q_u;
    }
  }
  if (grad != nullptr) {
    *grad = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
  }
  return value;
}

std::pair<double, SsLatent> ss_objective(const SsLatent& latent, const TimeSeriesDataset& data,
                                         const SsNsgpModel& model, DiscretizationScheme scheme) {
  const SsObjective obj(data, model, scheme);
  Eigen::VectorXd grad;
  const double v = obj.evaluate(latent.pack(), &grad);
  return {v, SsLatent::unpack(grad)};
}

void SsRegConfig::validate() const {
  const std::array<std::pair<const char*, const SsRegBlock*>, 3> named{
      {{"f", &f}, {"ell", &ell}, {"sigma", &sigma}}};
  for (const auto& [name, block] : named) {
    if (!(block->lambda >= 0.0)) {
      throw std::invalid_argument(std::string("lambda_") + name + " must be >= 0");
    }
    if (!(block->rho > 0.0)) {
      throw std::invalid_argument(std::string("rho_") + name + " must be > 0");
    }
  }
}

std::vector<double> SsAdmmState::lagrangian_sequence() const {
  std::vector<double> seq{initial_lagrangian};
  for (const auto& h : history) {
    seq.push_back(h.lagrangian);
  }
  return seq;
}

double ss_augmented_lagrangian(const SsAdmmState& state, const TimeSeriesDataset& data,
                               const SsNsgpModel& model, const SsRegConfig& reg,
                               DiscretizationScheme scheme) {
  const SsObjective obj(data, model, scheme);
  return ss_lagrangian_value(obj, reg, state.latent.pack(), state.aux, state.dual);
}

SsAdmmState initial_ss_admm_state(const SsLatent& init, const SsRegConfig& reg) {
  SsAdmmState state;
  state.latent = init;
  const Eigen::VectorXd z = init.pack();
  const auto blocks = reg.blocks();
  for (size_t b = 0; b < 3; ++b) {
    state.aux[b] = apply_psi(*blocks[b], z);
    state.dual[b] = Eigen::VectorXd::Zero(init.states.rows());
  }
  return state;
}

std::pair<SsLatent, SsAdmmState> ss_admm_fit(const TimeSeriesDataset& data,
                                             const SsNsgpModel& model, const SsRegConfig& reg,
                                             const SsLatent& init, const AdmmSettings& stop,
                                             DiscretizationScheme scheme) {
  reg.validate();
  const Eigen::Index n = data.size();
  if (init.states.rows() != n + 1) {
    throw std::invalid_argument("ss_admm_fit: initial states must have T + 1 rows");
  }
  if (!init.states.allFinite()) {
    throw std::invalid_argument("ss_admm_fit: initial states must be finite");
  }
  const SsObjective obj(data, model, scheme);
  const auto blocks = reg.blocks();
  const double scale = std::sqrt(static_cast<double>(n + 1));
  const double tol_primal = stop.tol_primal < 0.0 ? 1e-4 * scale : stop.tol_primal;
  const double tol_dual = stop.tol_dual < 0.0 ? 1e-4 * scale : stop.tol_dual;

  SsAdmmState state = initial_ss_admm_state(init, reg);
  Eigen::VectorXd z = init.pack();
  state.initial_lagrangian = ss_lagrangian_value(obj, reg, z, state.aux, state.dual);

  SmoothProblem sub;
  sub.dimension = z.size();
  sub.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    double v = obj.evaluate(x, &g);
    for (size_t b = 0; b < 3; ++b) {
      const auto& blk = *blocks[b];
      const Eigen::VectorXd r = apply_psi(blk, x) - state.aux[b] + state.dual[b];
      v += 0.5 * blk.rho * r.squaredNorm();
      add_psi_transpose(blk, blk.rho * r, g);
    }
    return v;
  };

  for (int it = 0; it < stop.max_outer; ++it) {
    try {
      z = minimize_smooth(sub, z, stop.inner).minimizer;
    } catch (const NumericalError& e) {
      throw NumericalError("ss_admm_fit: z-subproblem failed at outer iteration " +
                           std::to_string(it) + ": " + e.what());
    }
    AdmmIterate rec;
    for (size_t b = 0; b < 3; ++b) {
      const auto& blk = *blocks[b];
      const Eigen::VectorXd pz = apply_psi(blk, z);
      Eigen::VectorXd w_new = soft_threshold(pz + state.dual[b], blk.lambda / blk.rho);
      rec.dual_residual = std::max(rec.dual_residual, blk.rho * (w_new - state.aux[b]).norm());
      state.aux[b] = std::move(w_new);
      const Eigen::VectorXd r = pz - state.aux[b];
      state.dual[b] += r;
      rec.primal_residual = std::max(rec.primal_residual, r.norm());
    }
    rec.lagrangian = ss_lagrangian_value(obj, reg, z, state.aux, state.dual);
    if (!std::isfinite(rec.lagrangian)) {
      throw NumericalError("ss_admm_fit: non-finite Lagrangian at outer iteration " +
                           std::to_string(it));
    }
    state.history.push_back(rec);
    if (rec.primal_residual <= tol_primal && rec.dual_residual <= tol_dual) {
      state.converged = true;
      break;
    }
  }

  state.latent = SsLatent::unpack(z);
  state.lagrangian_monotone = is_non_increasing(state.lagrangian_sequence(), stop.monotone_slack);
  return {state.latent, std::move(state)};
}

double ss_regularized_objective(const SsObjective& objective, const SsRegConfig& reg,
                                const Eigen::VectorXd& z) {
  double v = objective.evaluate(z, nullptr);
  for (const auto* blk : reg.blocks()) {
    if (blk->lambda > 0.0) {
      v += blk->lambda * apply_psi(*blk, z).lpNorm<1>();
    }
  }
  return v;
}

SsLatent ss_subgradient_fit(const TimeSeriesDataset& data, const SsNsgpModel& model,
                            const SsRegConfig& reg, const SsLatent& init,
                            const SubgradientSettings& stop, DiscretizationScheme scheme) {
  reg.validate();
  const SsObjective obj(data, model, scheme);
  const auto blocks = reg.blocks();
  const SmoothObjective full = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    double v = obj.evaluate(x, &g);
    for (const auto* blk : blocks) {
      if (blk->lambda > 0.0) {
        const Eigen::VectorXd pz = apply_psi(*blk, x);
        v += blk->lambda * pz.lpNorm<1>();
        add_psi_transpose(*blk, blk->lambda * pz.cwiseSign(), g);
      }
    }
    return v;
  };
  return SsLatent::unpack(subgradient_descent(full, init.pack(), stop));
}

}  // namespace rnsgp

namespace rnsgp {

std::pair<SsLatent, OptimResult> ss_map_fit(const TimeSeriesDataset& data,
                                            const SsNsgpModel& model, const SsLatent& init,
                                            const LbfgsSettings& settings,
                                            DiscretizationScheme scheme) {
  const SsObjective obj(data, model, scheme);
  SmoothProblem p;
  p.dimension = init.states.size();
  p.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return obj.evaluate(x, &g); };
  OptimResult r = minimize_smooth(p, init.pack(), settings);
  return {SsLatent::unpack(r.minimizer), std::move(r)};
}

}  // namespace rnsgp
