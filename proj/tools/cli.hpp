#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace p2pgrid::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kSolverError = 2,
  kPartialRun = 3,
};

// Runs the command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace p2pgrid::cli
