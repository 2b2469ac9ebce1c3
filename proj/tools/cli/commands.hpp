#ifndef GBH_CLI_COMMANDS_HPP
#define GBH_CLI_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace gbh::cli {

enum ExitCode : int { ok = 0, validation_failure = 1, usage_error = 2 };

/// Parses `args` (without the program name) and runs the chosen
/// subcommand. Results go to files or `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gbh::cli

#endif  // GBH_CLI_COMMANDS_HPP
