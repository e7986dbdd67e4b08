#pragma once

#include <iosfwd>

namespace slmg {

/// Exit codes: 0 success, 1 internal invariant violation, 2 usage, I/O or
/// validation error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

/// Entry point of the `slmg` command-line tool. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slmg
