#include "rnsgp/optimizer.hpp"

#include "rnsgp/dataset.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace rnsgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  explicit Box(const SmoothProblem& p) {
    lower = p.lower.size() == p.dimension ? p.lower
                                          : Eigen::VectorXd::Constant(p.dimension, -p.default_box);
    upper = p.upper.size() == p.dimension ? p.upper
                                          : Eigen::VectorXd::Constant(p.dimension, p.default_box);
  }

  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  [[nodiscard]] bool inside(const Eigen::VectorXd& x) const {
    return (x.array() > lower.array()).all() && (x.array() < upper.array()).all();
  }

  [[nodiscard]] bool contains(const Eigen::VectorXd& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }

  // Gradient with components zeroed where the bound is active and descent
  // would leave the box.
  [[nodiscard]] Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& g) const {
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if ((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)) {
        pg[i] = 0.0;
      }
    }
    return pg;
  }
};

// Evaluates the objective, mapping numerical failures to +inf.
double safe_eval(const SmoothProblem& p, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  try {
    const double v = p.objective(x, g);
    if (!std::isfinite(v) || !g.allFinite()) {
      return kInf;
    }
    return v;
  } catch (const NumericalError&) {
    return kInf;
  }
}

struct LineSearchResult {
  bool accepted = false;
  Eigen::VectorXd x;
  double f = kInf;
  Eigen::VectorXd g;
};

// Projected backtracking used when the trial step would leave the box.
LineSearchResult backtrack(const SmoothProblem& p, const Box& box, const Eigen::VectorXd& x,
                           double fx, const Eigen::VectorXd& g, const Eigen::VectorXd& d,
                           double step, const LbfgsSettings& s) {
  LineSearchResult r;
  r.g.resize(p.dimension);
  for (int bt = 0; bt < s.max_backtracks; ++bt) {
    r.x = box.project(x + step * d);
    r.f = safe_eval(p, r.x, r.g);
    if (std::isfinite(r.f) && r.f <= fx + s.armijo * g.dot(r.x - x)) {
      r.accepted = true;
      return r;
    }
    step *= 0.5;
  }
  return r;
}

// Strong Wolfe search (bracketing and zoom). Every accepted point satisfies
// the Armijo condition; the curvature condition keeps the L-BFGS pairs
// positive. Trial points with non-finite values count as Armijo failures.
LineSearchResult wolfe_search(const SmoothProblem& p, const Box& box, const Eigen::VectorXd& x,
                              double fx,
                              const Eigen::VectorXd& g, const Eigen::VectorXd& d, double slope,
                              double step, const LbfgsSettings& s) {
  struct Trial {
    double a = 0.0;
    double f = 0.0;
    double dphi = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd g;
  };
  auto eval = [&](double a) {
    Trial t;
    t.a = a;
    t.x = x + a * d;
    t.g.resize(p.dimension);
    t.f = box.contains(t.x) ? safe_eval(p, t.x, t.g) : kInf;
    t.dphi = std::isfinite(t.f) ? t.g.dot(d) : 0.0;
    return t;
  };
  auto armijo_fails = [&](const Trial& t) {
    return !std::isfinite(t.f) || t.f > fx + s.armijo * t.a * slope;
  };
  auto curvature_ok = [&](const Trial& t) { return std::abs(t.dphi) <= -s.wolfe * slope; };
  auto done = [](Trial&& t) {
    LineSearchResult r;
    r.accepted = true;
    r.x = std::move(t.x);
    r.f = t.f;
    r.g = std::move(t.g);
    return r;
  };

  Trial lo{0.0, fx, slope, x, g};
  Trial hi;
  bool bracketed = false;
  double a = step;
  for (int i = 0; i < s.max_backtracks && !bracketed; ++i) {
    Trial t = eval(a);
    if (armijo_fails(t) || (i > 0 && t.f >= lo.f)) {
      hi = std::move(t);
      bracketed = true;
      break;
    }
    if (curvature_ok(t)) {
      return done(std::move(t));
    }
    if (t.dphi >= 0.0) {
      hi = std::move(lo);
      lo = std::move(t);
      bracketed = true;
      break;
    }
    lo = std::move(t);
    a *= 2.0;
  }
  if (!bracketed) {
    return lo.a > 0.0 ? done(std::move(lo)) : LineSearchResult{};
  }

  for (int i = 0; i < s.max_backtracks; ++i) {
    const double width = hi.a - lo.a;
    // Minimizer of the quadratic through f(lo), f'(lo), f(hi), safeguarded.
    double a_new = lo.a;
    const double denom = 2.0 * (hi.f - lo.f - lo.dphi * width);
    if (std::isfinite(hi.f) && denom > 0.0) {
      a_new = lo.a - lo.dphi * width * width / denom;
    }
    const double lo_cut = lo.a + 0.1 * width;
    const double hi_cut = hi.a - 0.1 * width;
    if (!(std::min(lo_cut, hi_cut) <= a_new && a_new <= std::max(lo_cut, hi_cut))) {
      a_new = lo.a + 0.5 * width;
    }
    Trial t = eval(a_new);
    if (armijo_fails(t) || t.f >= lo.f) {
      hi = std::move(t);
    } else {
      if (curvature_ok(t)) {
        return done(std::move(t));
      }
      if (t.dphi * (hi.a - lo.a) >= 0.0) {
        hi = std::move(lo);
      }
      lo = std::move(t);
    }
    if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, std::abs(lo.a))) {
      break;
    }
  }
  // Zoom exhausted: fall back to the best Armijo point, if any.
  return lo.a != 0.0 ? done(std::move(lo)) : LineSearchResult{};
}

}  // namespace

OptimResult minimize_smooth(const SmoothProblem& p, const Eigen::VectorXd& x0,
                            const LbfgsSettings& s) {
  if (x0.size() != p.dimension) {
    throw std::invalid_argument("minimize_smooth: x0 has wrong dimension");
  }
  if (!(s.tol_grad > 0.0)) {
    throw std::invalid_argument("minimize_smooth: tol_grad must be positive");
  }
  const Box box(p);
  if (!box.contains(x0)) {
    throw std::invalid_argument("minimize_smooth: x0 outside bounds");
  }

  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(p.dimension);
  double fx = safe_eval(p, x, g);
  if (!std::isfinite(fx)) {
    throw NumericalError("minimize_smooth: objective not finite at the initial point");
  }

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  OptimResult res;
  Eigen::VectorXd pg = box.projected_gradient(x, g);
  res.grad_norm = pg.lpNorm<Eigen::Infinity>();
  if (res.grad_norm <= s.tol_grad) {
    res.converged = true;
  }

  Eigen::VectorXd g_new(p.dimension);
  while (!res.converged && res.iterations < s.max_iters) {
    // Two-loop recursion.
    Eigen::VectorXd d = -pg;
    const auto m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(static_cast<size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      alpha[static_cast<size_t>(i)] = rho_hist[static_cast<size_t>(i)] * s_hist[static_cast<size_t>(i)].dot(d);
      d -= alpha[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)];
    }
    if (m > 0) {
      const auto& sl = s_hist.back();
      const auto& yl = y_hist.back();
      d *= sl.dot(yl) / yl.squaredNorm();
    }
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)].dot(d);
      d += s_hist[static_cast<size_t>(i)] * (alpha[static_cast<size_t>(i)] - beta);
    }
    d = -box.projected_gradient(x, -d);  // keep active-bound components fixed
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -pg;
      slope = g.dot(d);
    }

    double step = s.initial_step;
    if (s_hist.empty()) {
      step = std::min(s.initial_step, 1.0 / d.norm());
    }

    const LineSearchResult ls = box.inside(x + step * d)
                                    ? wolfe_search(p, box, x, fx, g, d, slope, step, s)
                                    : backtrack(p, box, x, fx, g, d, step, s);
    ++res.iterations;
    if (!ls.accepted) {
      if (!s_hist.empty()) {
        // Retry from steepest descent before giving up.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      break;
    }
    const Eigen::VectorXd& x_new = ls.x;
    const double f_new = ls.f;
    g_new = ls.g;

    Eigen::VectorXd sk = x_new - x;
    Eigen::VectorXd yk = g_new - g;
    const double f_old = fx;
    x = x_new;
    fx = f_new;
    g = g_new;
    pg = box.projected_gradient(x, g);
    res.grad_norm = pg.lpNorm<Eigen::Infinity>();

    const double sy = sk.dot(yk);
    if (sy > 1e-12 * yk.squaredNorm() && sy > 0.0) {
      s_hist.push_back(std::move(sk));
      y_hist.push_back(std::move(yk));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > s.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    if (res.grad_norm <= s.tol_grad ||
        std::abs(f_old - fx) <= s.rel_ftol * std::abs(f_old)) {
      res.converged = true;
    }
  }

  res.minimizer = std::move(x);
  res.value = fx;
  return res;
}

OptimResult minimize_smooth(const SmoothProblem& p, const Eigen::VectorXd& x0, double tol_grad,
                            int max_iters) {
  LbfgsSettings s;
  s.tol_grad = tol_grad;
  s.max_iters = max_iters;
  return minimize_smooth(p, x0, s);
}

double check_gradient(const SmoothProblem& p, const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("check_gradient: step must be positive");
  }
  Eigen::VectorXd g(p.dimension);
  p.objective(x, g);
  Eigen::VectorXd scratch(p.dimension);
  double worst = 0.0;
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < p.dimension; ++i) {
    xp[i] = x[i] + step;
    const double fp = p.objective(xp, scratch);
    xp[i] = x[i] - step;
    const double fm = p.objective(xp, scratch);
    xp[i] = x[i];
    const double numeric = (fp - fm) / (2.0 * step);
    worst = std::max(worst, std::abs(g[i] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace rnsgp
