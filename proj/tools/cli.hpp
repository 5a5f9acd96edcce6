#pragma once

#include <ostream>

namespace nsreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Parses argv (argv[0] is the program name) and runs one subcommand.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nsreg::cli
