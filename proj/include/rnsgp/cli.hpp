#pragma once

#include <ostream>

namespace rnsgp {

/// Entry point of the `rnsgp` command (subcommands experiment, fit,
/// diagnose). Returns 0 on success, 1 on invalid input or configuration and
/// 2 on a runtime or solver failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rnsgp
