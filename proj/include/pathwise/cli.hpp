#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pathwise {

inline constexpr const char* kToolVersion = "pathwise 1.0.0";

/// Runs one subcommand; args exclude the program name. Returns 0 on success,
/// 1 when a verdict fails or a solver gives up, 2 on usage or input errors.
/// The JSON report goes to --out, or to `out` when --out is absent.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pathwise
