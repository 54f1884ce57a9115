#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dskd::cli {

/// Exit codes: 0 success, 1 usage error, 2 runtime error.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kRuntime = 2;

/// Runs one subcommand. `args` excludes the program name. The one-line key=value
/// summary goes to `out`, diagnostics and help to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dskd::cli
