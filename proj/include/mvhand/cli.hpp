#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mvhand {

// Entry point shared by the mvhand binary and the in-process CLI tests.
// args excludes the program name. Returns the process exit code:
// 0 success, 1 usage error, 2 data/schema error, 3 numerical failure.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace mvhand
