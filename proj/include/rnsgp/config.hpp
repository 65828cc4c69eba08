#pragma once

#include "rnsgp/harness.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace rnsgp {

/// Invalid configuration document; the message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parsed run-spec document. Every key is optional; missing keys keep the
/// defaults of ExperimentConfig and MethodSettings::defaults().
struct RunSpec {
  ExperimentConfig experiment;
  /// Method used by `fit` and `diagnose`.
  Method method = Method::kRSsNsgpAdmm;
};

/// Parses and validates a JSON run spec. Unknown keys are rejected.
[[nodiscard]] RunSpec parse_run_spec(const std::string& json_text);
[[nodiscard]] RunSpec load_run_spec(const std::filesystem::path& file);

}  // namespace rnsgp
