#pragma once

#include <string>
#include <vector>

namespace iftkit::cli {

// Runs one invocation; args excludes the program name. Returns the process
// exit code: 0 success, 2 usage/IO, 3 validation, 4 transport, 5 parse.
int run(const std::vector<std::string>& args);

}  // namespace iftkit::cli
