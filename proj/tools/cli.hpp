#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace longicog::cli {

/// Runs the command line `args` (without the program name). Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace longicog::cli
