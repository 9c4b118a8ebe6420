#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace neurint {

/// Runs one CLI invocation (`args` excludes the program name).
/// Returns 0 on success, 2 on usage errors and 1 on any other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace neurint
