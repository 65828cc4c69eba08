#include "rnsgp/transforms.hpp"

#include <cmath>
#include <stdexcept>

namespace rnsgp {

namespace {

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double LinkTransform::apply(double u) const {
  const double x = u + baseline;
  switch (kind) {
    case LinkKind::kExp:
      return std::exp(x) + floor;
    case LinkKind::kLogistic:
      return logistic(x) + floor;
  }
  return 0.0;
}

double LinkTransform::deriv(double u, int order) const {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("LinkTransform::deriv: order must be 1 or 2");
  }
  const double x = u + baseline;
  switch (kind) {
    case LinkKind::kExp:
      return std::exp(x);
    case LinkKind::kLogistic: {
      const double s = logistic(x);
      const double d1 = s * (1.0 - s);
      return order == 1 ? d1 : d1 * (1.0 - 2.0 * s);
    }
  }
  return 0.0;
}

}  // namespace rnsgp
