#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace beta3irt {

/// Parse and execute one tool invocation (arguments without the program
/// name). Returns the process exit code: 0 success, 2 usage error,
/// 3 data/format error, 4 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace beta3irt
