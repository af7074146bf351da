#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qkdd {

/// Command-line entry point. `args` excludes the program name. Returns 0 on
/// success, 1 on configuration or usage errors, 2 when a numerical guard
/// fails.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qkdd
