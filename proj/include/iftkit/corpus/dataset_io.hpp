#pragma once

#include <filesystem>
#include <string_view>

#include "iftkit/corpus/record.hpp"

namespace iftkit::corpus {

enum class DatasetFormat {
  kAlpacaJson,         // JSON array of {"instruction","input","output"}
  kLimaConversations,  // JSON lines of {"conversations":[user, assistant]}
  kJsonlSourced,       // JSON lines with a required "source"
  kJsonlGeneric,       // JSON lines, "source" optional
};

DatasetFormat parse_format(std::string_view name);
std::string_view format_name(DatasetFormat format);

// Throws ParseError (with line and byte offset) on malformed JSON and
// SchemaError (naming the record index and field) on a missing field.
Records load_dataset(const std::filesystem::path& path, DatasetFormat format);

// In-memory variant of load_dataset; `origin` is used in error messages.
Records parse_dataset(std::string_view text, DatasetFormat format,
                      std::string_view origin = "<memory>");

void write_dataset(const Records& records, const std::filesystem::path& path,
                   DatasetFormat format);

std::string serialize_dataset(const Records& records, DatasetFormat format);

}  // namespace iftkit::corpus
