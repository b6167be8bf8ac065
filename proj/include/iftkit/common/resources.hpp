#pragma once

#include <string_view>
#include <vector>

namespace iftkit {

// Versioned prompt templates and string tables compiled in from resources/.
// Names are paths relative to that directory, e.g. "templates/pairwise-v1.txt".
std::string_view builtin_resource(std::string_view name);

std::vector<std::string_view> builtin_resource_names();

}  // namespace iftkit
