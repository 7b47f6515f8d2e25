#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sbfc::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1; // replay found differing outputs, or an unexpected error
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Runs one command line (args excludes the program name) and returns the exit status.
/// Commands: simulate, tune, sweep, metrics, replay. Outputs land only inside --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sbfc::cli
