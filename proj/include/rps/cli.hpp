#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rps {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

/// Entry point of rps_cli. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

/// Shortest round-trip decimal form of v.
std::string format_number(double v);

}  // namespace rps
