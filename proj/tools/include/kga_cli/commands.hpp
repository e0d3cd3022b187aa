#pragma once

#include <iosfwd>

namespace kga::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

/// Parses arguments and runs one subcommand. Config layers, lowest first:
/// --config file, KGA_* variables from `env`, command-line flags.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, char** env);

}  // namespace kga::cli
