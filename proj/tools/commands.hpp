#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bpr::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitInternal = 4,
};

// Parses `args` (argv without the program name), runs the subcommand and
// maps failures to exit codes. Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bpr::cli
