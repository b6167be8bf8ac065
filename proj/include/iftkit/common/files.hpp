#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace iftkit {

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename(), so readers never observe
// a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// RFC 3339 UTC timestamp with second precision, e.g. 2024-01-31T12:00:00Z.
std::string rfc3339_now();

}  // namespace iftkit
