#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace photonstat::cli {

/// Exit codes: 0 success, 1 runtime error, 2 invalid arguments or config.
enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Runs one command line. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace photonstat::cli
