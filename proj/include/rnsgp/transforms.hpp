#pragma once

namespace rnsgp {

enum class LinkKind {
  kExp,
  /// exp(x) / (1 + exp(x)). Often called "softplus" in the NSGP literature,
  /// but it is the logistic sigmoid and is bounded in (0, 1).
  kLogistic,
};

/// Positive link g mapping a latent u-process value to a length-scale or
/// magnitude: g(u) = h(u + baseline) + floor, h in {exp, logistic}.
struct LinkTransform {
  LinkKind kind = LinkKind::kExp;
  double baseline = 0.0;
  /// Nonnegative additive floor; a positive floor gives a uniformly lower
  /// bounded link.
  double floor = 0.0;

  [[nodiscard]] double apply(double u) const;
  /// Analytic derivative of apply(); order must be 1 or 2.
  [[nodiscard]] double deriv(double u, int order) const;
};

}  // namespace rnsgp
