#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bernfit::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDataError = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalError = 3;

/// Runs one subcommand. args[0] is the program name. Results go to files or
/// `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace bernfit::cli
