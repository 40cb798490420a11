#pragma once

#include <ostream>

namespace ersd::cli {

/// Parses argv, runs one subcommand and returns the process exit code:
/// 0 success, 2 usage, 3 configuration, 4 numeric failure, 5 missing input.
/// Errors are written to `err` as a single-line JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ersd::cli
