#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rnsgp {

/// Raised when a factorization or evaluation leaves the numerically valid
/// region (non-PD covariance, non-finite objective, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered scalar measurements y_k = f(t_k) + r_k with r_k ~ N(0, R_k).
struct TimeSeriesDataset {
  Eigen::VectorXd times;
  Eigen::VectorXd values;
  Eigen::VectorXd noise_var;

  [[nodiscard]] Eigen::Index size() const { return times.size(); }

  /// Throws std::invalid_argument on length mismatch, non-increasing times
  /// or nonpositive noise variances.
  void validate() const;
};

inline void TimeSeriesDataset::validate() const {
  if (values.size() != times.size() || noise_var.size() != times.size()) {
    throw std::invalid_argument("dataset: times, values and noise_var must have equal length");
  }
  if (times.size() == 0) {
    throw std::invalid_argument("dataset: empty");
  }
  for (Eigen::Index k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw std::invalid_argument("dataset: times not strictly increasing at index " +
                                  std::to_string(k));
    }
  }
  for (Eigen::Index k = 0; k < noise_var.size(); ++k) {
    if (!(noise_var[k] > 0.0)) {
      throw std::invalid_argument("dataset: noise variance must be positive at index " +
                                  std::to_string(k));
    }
  }
}

}  // namespace rnsgp
