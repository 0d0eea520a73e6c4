#pragma once

namespace clbf {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitNotConverged = 3,
  kExitCertification = 4,
};

/// Entry point of the `clbf` tool: subcommands solve, certify, simulate,
/// batch-verify, sweep and bench-list.
int run_cli(int argc, char** argv);

}  // namespace clbf
