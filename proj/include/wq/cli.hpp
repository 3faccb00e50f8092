#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wq {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,     // bad flags, unreadable or invalid measure spec
  kExitReported = 2,  // report written, but the run did not converge or a check failed
};

/// Runs one command line (args[0] is the program name). Reports go to the
/// --out file when given, else to `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wq
