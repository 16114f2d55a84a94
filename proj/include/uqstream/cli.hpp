#ifndef UQSTREAM_CLI_HPP
#define UQSTREAM_CLI_HPP

#include <iosfwd>

namespace uqstream {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Subcommands: run, compare, verify, table. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uqstream

#endif  // UQSTREAM_CLI_HPP
