#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace iftkit::corpus {

enum class TokenScheme { kBytes, kUnicodeWords, kBpe };

TokenScheme parse_scheme(std::string_view name);
std::string_view scheme_name(TokenScheme scheme);

struct TokenCounterSpec {
  TokenScheme scheme = TokenScheme::kUnicodeWords;
  std::optional<std::filesystem::path> bpe_definition_path;

  nlohmann::json to_json() const;
  static TokenCounterSpec from_json(const nlohmann::json& j);
};

// Splits UTF-8 text into maximal letter/digit runs and standalone
// punctuation/symbol marks. Whitespace and control characters separate
// tokens and are never part of one. Bytes that are not valid UTF-8 are
// treated as letters.
std::vector<std::string_view> unicode_words(std::string_view text);

// Splits one UTF-8 string into code point substrings.
std::vector<std::string_view> code_points(std::string_view text);

// Ordered merge list plus vocabulary, loaded from a JSON definition file:
//   {"vocab": ["a", "b", "ab", ...], "merges": ["a b", ...]}
// Every merge operand must be a single code point or the product of an
// earlier merge.
class BpeModel {
 public:
  static BpeModel from_json(const nlohmann::json& definition);
  static BpeModel load(const std::filesystem::path& path);

  // Number of symbols left after greedy merging of one pre-token.
  std::size_t count_word(std::string_view word) const;
  std::vector<std::string> segment_word(std::string_view word) const;

  std::size_t merge_count() const { return ranks_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> ranks_;  // "left right" -> rank
};

// Pure, thread-safe token counter. All configuration errors surface from the
// constructor; count() never throws.
class TokenCounter {
 public:
  explicit TokenCounter(TokenCounterSpec spec = {});

  std::int64_t count(std::string_view text) const;

  const TokenCounterSpec& spec() const { return spec_; }
  // SHA-256 of the BPE definition file, when the scheme uses one.
  const std::optional<std::string>& definition_sha256() const {
    return definition_sha256_;
  }
  // Digest over scheme and definition digest; identifies the counting rule.
  std::string counter_hash() const;

 private:
  TokenCounterSpec spec_;
  std::optional<std::string> definition_sha256_;
  std::shared_ptr<const BpeModel> bpe_;
};

}  // namespace iftkit::corpus
