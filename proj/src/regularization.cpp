#include "rnsgp/regularization.hpp"

#include "rnsgp/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace rnsgp {

Eigen::VectorXd RegMatrix::apply(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case RegMatrixKind::kIdentity:
      return x;
    case RegMatrixKind::kFirstDifference: {
      Eigen::VectorXd out = x;
      for (Eigen::Index k = x.size() - 1; k > 0; --k) {
        out[k] -= x[k - 1];
      }
      return out;
    }
    case RegMatrixKind::kDense:
      return dense_ * x;
  }
  return x;
}

Eigen::VectorXd RegMatrix::apply_transpose(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case RegMatrixKind::kIdentity:
      return x;
    case RegMatrixKind::kFirstDifference: {
      Eigen::VectorXd out = x;
      for (Eigen::Index k = 0; k + 1 < x.size(); ++k) {
        out[k] -= x[k + 1];
      }
      return out;
    }
    case RegMatrixKind::kDense:
      return dense_.transpose() * x;
  }
  return x;
}

Eigen::MatrixXd RegMatrix::to_dense(Eigen::Index n) const {
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.col(j) = apply(Eigen::VectorXd::Unit(n, j));
  }
  return out;
}

void RegMatrix::validate(Eigen::Index n) const {
  if (kind_ == RegMatrixKind::kDense && (dense_.rows() != n || dense_.cols() != n)) {
    throw std::invalid_argument("regularization matrix must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  }
}

void RegConfig::validate(Eigen::Index n) const {
  const std::array<std::pair<const char*, const RegBlock*>, 3> named{
      {{"f", &f}, {"ell", &ell}, {"sigma", &sigma}}};
  for (const auto& [name, block] : named) {
    if (!(block->lambda >= 0.0)) {
      throw std::invalid_argument(std::string("lambda_") + name + " must be >= 0");
    }
    if (!(block->rho > 0.0)) {
      throw std::invalid_argument(std::string("rho_") + name + " must be > 0");
    }
    block->phi.validate(n);
  }
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& a, double kappa) {
  if (!(kappa >= 0.0)) {
    throw std::invalid_argument("soft_threshold: kappa must be nonnegative");
  }
  Eigen::VectorXd out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double mag = std::abs(a[i]) - kappa;
    out[i] = mag > 0.0 ? std::copysign(mag, a[i]) : 0.0;
  }
  return out;
}

bool lemma6_inequality_holds(const Eigen::VectorXd& v, const Eigen::VectorXd& a, double rho) {
  if (!(rho > 0.0)) {
    throw std::invalid_argument("lemma6_inequality_holds: rho must be positive");
  }
  const Eigen::VectorXd diff = a - v;
  double lhs = 0.5 * rho * diff.squaredNorm();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double sgn = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
    lhs += sgn * diff[i];
  }
  const double rhs = -static_cast<double>(v.size()) / (2.0 * rho);
  // Equality is attainable; allow rounding in the sum.
  return lhs >= rhs - 1e-12 * std::max(1.0, std::abs(rhs));
}

bool is_non_increasing(const std::vector<double>& lagrangians, double rel_slack) {
  if (lagrangians.empty()) {
    return true;
  }
  const double slack = rel_slack * std::abs(lagrangians.front());
  for (size_t i = 1; i < lagrangians.size(); ++i) {
    if (lagrangians[i] > lagrangians[i - 1] + slack) {
      return false;
    }
  }
  return true;
}

}  // namespace rnsgp

namespace rnsgp {

Eigen::VectorXd l1_subgradient(const RegBlock& block, const Eigen::VectorXd& x) {
  const Eigen::VectorXd px = block.phi.apply(x);
  Eigen::VectorXd sgn(px.size());
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    sgn[i] = px[i] > 0.0 ? 1.0 : (px[i] < 0.0 ? -1.0 : 0.0);
  }
  return block.lambda * block.phi.apply_transpose(sgn);
}

Eigen::VectorXd subgradient_descent(const SmoothObjective& objective, const Eigen::VectorXd& x0,
                                    const SubgradientSettings& settings) {
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(x0.size());
  double fx = objective(x, g);
  if (!std::isfinite(fx) || !g.allFinite()) {
    throw NumericalError("subgradient_descent: objective not finite at the initial point");
  }
  Eigen::VectorXd best = x;
  double best_value = fx;
  const double g1 = g.norm();
  if (g1 == 0.0) {
    return x;
  }
  const double c = settings.step / g1;
  for (int i = 1; i <= settings.max_iters; ++i) {
    x -= (c / std::sqrt(static_cast<double>(i))) * g;
    bool finite = true;
    try {
      fx = objective(x, g);
      finite = std::isfinite(fx) && g.allFinite();
    } catch (const NumericalError&) {
      finite = false;
    }
    if (!finite) {
      x = best;
      fx = objective(x, g);
      continue;
    }
    if (fx < best_value) {
      best_value = fx;
      best = x;
    }
  }
  return best;
}

}  // namespace rnsgp
