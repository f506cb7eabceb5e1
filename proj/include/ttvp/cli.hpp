#ifndef TTVP_CLI_HPP
#define TTVP_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace ttvp {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       // unexpected error
  kExitUsage = 2,         // bad flags, configuration or data
  kExitIo = 3,
  kExitNumerical = 4,
  kExitValidationFailed = 5,
};

/// Runs one subcommand (simulate, fit, forecast, irf, diag, validate).
/// args excludes the program name. Errors are reported on `err` as a single
/// JSON object {"error": {"kind": ..., "message": ...}}.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ttvp

#endif
