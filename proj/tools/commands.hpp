#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gibbsgap::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitPrecondition = 2,
  kExitValidation = 3,
};

// Runs one command line (without the program name). Result files go under
// --out; a human-readable table goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gibbsgap::cli
