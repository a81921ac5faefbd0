#pragma once

#include <iosfwd>

namespace ucrcd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitSolver = 2;

/// Runs one `ucrcd` subcommand. Results go to `out`, diagnostics to `err`.
/// Returns 0 on success, 1 on input errors, 2 when estimation does not converge
/// or fails.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ucrcd::cli
