#pragma once

#include <ostream>

namespace fsmre {

/// Exit statuses of the command-line tool.
enum ExitStatus : int {
  kExitOk = 0,
  kExitNotEquivalent = 1,
  kExitUsage = 2,  // bad flags, unreadable or malformed input, arity mismatch
  kExitGoalNotMet = 3,
};

/// Entry point of the `fsmre` tool. Subcommands: convert, attack, verify,
/// calibrate. Machine paths of the form `builtin:<name>` load an embedded
/// benchmark; `random:<states>:<input bits>:<output bits>:<seed>` generates a
/// strongly connected minimal machine.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fsmre
