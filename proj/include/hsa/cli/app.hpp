#pragma once

#include <iosfwd>

namespace hsa::cli {

enum ExitCode : int {
  kOk = 0,
  kPropertyFailure = 1,
  kConfigError = 2,
  kNumericalFailure = 3,
  kPlannerFailure = 4,
};

// Entry point of the command-line tool; results go to `out`, diagnostics to `err`.
int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsa::cli
