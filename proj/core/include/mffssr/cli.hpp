#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mffssr::cli {

// Dispatches one invocation (args excludes the program name). Exit codes:
// 0 success, 2 usage error, 3 data error, 4 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mffssr::cli
