#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvocab {

// Entry point of the `mvocab` executable. `args` excludes the program name.
// Returns the process exit code: 0 success, 1 usage, 2 IO, 3 training.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace mvocab
