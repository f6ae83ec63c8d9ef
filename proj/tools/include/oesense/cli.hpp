#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace oesense::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitProcessing = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line. `args` excludes the program name. Results go to
/// `out` as JSON lines, diagnostics and help text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace oesense::cli
