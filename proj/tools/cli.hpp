#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qabias::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitIo = 4;

/// Runs one invocation; `args` excludes the program name. Errors are
/// reported on `err` as a single JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qabias::cli
