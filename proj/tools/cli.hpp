#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rishp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kRefused = 3,
};

/// Runs one subcommand. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "a,b,c" or "start:step:stop" into a nonempty, strictly increasing grid.
std::vector<double> parse_snr_grid(const std::string& text);

}  // namespace rishp::cli
