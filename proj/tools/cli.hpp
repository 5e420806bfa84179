// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_TOOLS_CLI_HPP
#define GKDV_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace gkdv::cli
{

// Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.
inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_numerical = 2;

// Runs `gkdv <args...>`; args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Expands `--config FILE` (a JSON object of flag names to values) into flags
// placed before the command-line flags of the subcommand; flags given on the
// command line win.
std::vector<std::string> expand_config(const std::vector<std::string> &args);

} // namespace gkdv::cli

#endif // GKDV_TOOLS_CLI_HPP
