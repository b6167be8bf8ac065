#include "iftkit/analysis/length_control.hpp"

#include "iftkit/common/error.hpp"
#include "iftkit/common/resources.hpp"

namespace iftkit::analysis {

LengthControlMode LengthControlMode::n_paragraphs(int n) {
  if (n < 1) throw ValidationError("paragraph count must be >= 1");
  return {Kind::kNParagraphs, n};
}

LengthControlMode LengthControlMode::min_tokens(int t) {
  if (t < 1) throw ValidationError("minimum token count must be >= 1");
  return {Kind::kMinTokens, t};
}

LengthControlMode LengthControlMode::parse(std::string_view text) {
  auto number_after = [&](std::string_view prefix) {
    try {
      return std::stoi(std::string(text.substr(prefix.size())));
    } catch (const std::exception&) {
      throw UsageError("bad length-control mode '" + std::string(text) + "'");
    }
  };
  if (text == "none") return none();
  if (text == "concise") return concise();
  if (text.starts_with("paragraphs:")) return n_paragraphs(number_after("paragraphs:"));
  if (text.starts_with("min-tokens:")) return min_tokens(number_after("min-tokens:"));
  throw UsageError("bad length-control mode '" + std::string(text) +
                   "' (expected none, concise, paragraphs:N or min-tokens:T)");
}

const LengthControlStrings& LengthControlStrings::builtin() {
  static const LengthControlStrings strings = [] {
    const auto j = nlohmann::json::parse(builtin_resource("length_control-v1.json"));
    return LengthControlStrings{j.at("version").get<std::string>(),
                                j.at("concise_suffix").get<std::string>(),
                                j.at("n_paragraphs").get<std::string>()};
  }();
  return strings;
}

std::string apply_length_control(std::string_view prompt, const LengthControlMode& mode) {
  const auto& strings = LengthControlStrings::builtin();
  std::string suffix;
  switch (mode.kind) {
    case LengthControlMode::Kind::kNone:
    case LengthControlMode::Kind::kMinTokens:
      return std::string(prompt);
    case LengthControlMode::Kind::kConciseSuffix:
      suffix = strings.concise_suffix;
      break;
    case LengthControlMode::Kind::kNParagraphs: {
      suffix = strings.n_paragraphs;
      const auto at = suffix.find("{n}");
      suffix.replace(at, 3, std::to_string(mode.value));
      break;
    }
  }
  const std::string tail = "\n\n" + suffix;
  if (prompt.ends_with(tail)) return std::string(prompt);
  return std::string(prompt) + tail;
}

nlohmann::ordered_json emit_generation_config(int max_new_tokens,
                                              std::optional<int> min_new_tokens) {
  if (max_new_tokens < 1) throw ValidationError("max_new_tokens must be positive");
  nlohmann::ordered_json j;
  j["max_new_tokens"] = max_new_tokens;
  if (min_new_tokens) {
    if (*min_new_tokens < 1 || *min_new_tokens >= max_new_tokens) {
      throw ValidationError("min_new_tokens must satisfy 1 <= min < max_new_tokens");
    }
    j["min_new_tokens"] = *min_new_tokens;
  }
  return j;
}

}  // namespace iftkit::analysis
