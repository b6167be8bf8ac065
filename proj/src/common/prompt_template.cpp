#include "iftkit/common/prompt_template.hpp"

#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"
#include "iftkit/common/resources.hpp"

namespace iftkit {

PromptTemplate::PromptTemplate(std::string id, std::string text)
    : id_(std::move(id)), text_(std::move(text)) {}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  try {
    return PromptTemplate(path.stem().string(), read_file(path));
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot load template: ") + e.what());
  }
}

PromptTemplate PromptTemplate::builtin(std::string_view id) {
  return PromptTemplate(
      std::string(id),
      std::string(builtin_resource("templates/" + std::string(id) + ".txt")));
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size() + 256);
  std::size_t i = 0;
  while (i < text_.size()) {
    if (text_[i] == '{') {
      const auto close = text_.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = values.find(text_.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += text_[i++];
  }
  return out;
}

std::size_t PromptTemplate::placeholder_count(std::string_view name) const {
  const std::string needle = "{" + std::string(name) + "}";
  std::size_t n = 0;
  for (auto pos = text_.find(needle); pos != std::string::npos;
       pos = text_.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::size_t find_line_start(std::string_view text, std::string_view label,
                            std::size_t from) {
  std::size_t pos = from;
  while (pos <= text.size()) {
    if ((pos == 0 || text[pos - 1] == '\n') &&
        text.substr(pos, label.size()) == label) {
      return pos;
    }
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return std::string_view::npos;
}

std::size_t count_line_starts(std::string_view text, std::string_view label) {
  std::size_t n = 0;
  for (auto pos = find_line_start(text, label); pos != std::string_view::npos;
       pos = find_line_start(text, label, pos + 1)) {
    ++n;
  }
  return n;
}

std::string quote_if_reserved(std::string_view text,
                              const std::vector<std::string_view>& labels) {
  bool reserved = false;
  std::size_t pos = 0;
  while (!reserved && pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string_view::npos) {
      line.remove_prefix(first);
      for (auto label : labels) {
        if (line.substr(0, label.size()) == label) reserved = true;
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!reserved) return std::string(text);

  std::string out = "> ";
  for (char c : text) {
    out += c;
    if (c == '\n') out += "> ";
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(b, e - b + 1);
}

}  // namespace iftkit
