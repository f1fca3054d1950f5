#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace knnrate {

// Command-line entry. `args` excludes the program name. Returns the process
// exit code: 0 success, 1 validation error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace knnrate
