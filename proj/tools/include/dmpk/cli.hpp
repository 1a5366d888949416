#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dmpk::cli {

enum ExitCode : int {
  kPass = 0,
  kCheckFailed = 1,
  kUsageError = 2,
  kNumericalFailure = 3,
};

/// Runs one command line (without the program name). Summaries go to `out`,
/// diagnostics to `err`; files are written where the flags say.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmpk::cli
