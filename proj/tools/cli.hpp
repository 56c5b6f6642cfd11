#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sldlag::cli {

/* Process exit codes. */
inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

/* Runs one subcommand. args[0] is the subcommand name (the program name is
 * not included). Results go to `out`, diagnostics to `err`. */
int run_subcommand(std::vector<std::string> args, std::ostream & out, std::ostream & err);

/* Parses a key=value configuration file into "--key=value" tokens. Blank
 * lines and lines starting with '#' are skipped. */
std::vector<std::string> config_tokens(std::string const & text);

} // namespace sldlag::cli
