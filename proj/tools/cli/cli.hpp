#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace syntaxlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

/// Runs one command line. `args` excludes the program name. Data goes to
/// `out`, usage and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace syntaxlens::cli
