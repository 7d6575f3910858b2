#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fdnn::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

/// Runs the command line `args` (args[0] is the program name). Never throws;
/// errors are written to `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdnn::cli
