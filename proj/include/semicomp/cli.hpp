#pragma once

// Command-line front end:
//   semicomp fit --data FILE [options]
//   semicomp simulate --scenario FILE --out PREFIX
//   semicomp validate [--seed N] [--tol-scale X]

#include <iosfwd>
#include <string>
#include <vector>

namespace semicomp {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidationFailure = 1,
  kExitInputError = 2,
  kExitNotConverged = 3,
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semicomp
