#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace iftkit {

// A text template with {name} placeholders, tagged with a version id.
class PromptTemplate {
 public:
  PromptTemplate(std::string id, std::string text);

  // Reads a template file; the id defaults to the file stem.
  static PromptTemplate load(const std::filesystem::path& path);
  // Compiled-in template, e.g. builtin("introspection-v1").
  static PromptTemplate builtin(std::string_view id);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }

  // Substitutes every {key} in a single pass; substituted values are never
  // re-scanned. Unknown braces are left alone.
  std::string render(const std::map<std::string, std::string>& values) const;

  std::size_t placeholder_count(std::string_view name) const;

 private:
  std::string id_;
  std::string text_;
};

// Lines of `text` that begin with `label` (no leading whitespace).
std::size_t count_line_starts(std::string_view text, std::string_view label);

// Byte offset of the first line beginning with `label`, or npos.
std::size_t find_line_start(std::string_view text, std::string_view label,
                            std::size_t from = 0);

// Returns `text` unchanged unless one of its lines, ignoring leading
// whitespace, begins with a reserved label. In that case every line is
// prefixed with "> " so that no embedded line can be mistaken for a section
// marker.
std::string quote_if_reserved(std::string_view text,
                              const std::vector<std::string_view>& labels);

// Strips ASCII whitespace at both ends.
std::string_view trim(std::string_view s);

}  // namespace iftkit
