#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace iftkit::analysis {

struct LengthControlMode {
  enum class Kind { kNone, kConciseSuffix, kNParagraphs, kMinTokens };
  Kind kind = Kind::kNone;
  int value = 0;  // n for kNParagraphs, t for kMinTokens

  static LengthControlMode none() { return {}; }
  static LengthControlMode concise() { return {Kind::kConciseSuffix, 0}; }
  static LengthControlMode n_paragraphs(int n);
  static LengthControlMode min_tokens(int t);
  // "none", "concise", "paragraphs:N", "min-tokens:T"
  static LengthControlMode parse(std::string_view text);
};

// Suffix sentences from the versioned resource length_control-v1.json.
struct LengthControlStrings {
  std::string version;
  std::string concise_suffix;
  std::string n_paragraphs;  // contains {n}

  static const LengthControlStrings& builtin();
};

// Appends the mode's instruction after a blank line. Idempotent: a prompt
// that already ends with the suffix is returned unchanged. kMinTokens is a
// generation-config concern and leaves the prompt alone.
std::string apply_length_control(std::string_view prompt, const LengthControlMode& mode);

// {"max_new_tokens": M} or {"max_new_tokens": M, "min_new_tokens": m}.
// Throws ValidationError unless 1 <= m < M.
nlohmann::ordered_json emit_generation_config(int max_new_tokens,
                                              std::optional<int> min_new_tokens = {});

}  // namespace iftkit::analysis
