#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cmtf {

/// Exit codes of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,     // unknown flag, bad value, missing subcommand
  kExitInput = 3,     // unreadable or malformed input file
  kExitFailure = 4,   // numerical failure or unwritable output
};

/// Runs the cmtf_bsd command line; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cmtf
