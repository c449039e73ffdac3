#pragma once

#include <iosfwd>

namespace semenet {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,  ///< bad flags, config keys or input data
  kExitRuntime = 2,  ///< failure while running (I/O, checkpoint, training)
};

/// Entry point of the `semenet` tool; see README for subcommands.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semenet
