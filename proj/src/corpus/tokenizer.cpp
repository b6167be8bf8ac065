#include "iftkit/corpus/tokenizer.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "iftkit/common/digest.hpp"
#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"

namespace iftkit::corpus {

namespace {

enum class CharClass { kSpace, kWord, kMark };

struct Decoded {
  char32_t cp;
  std::size_t len;
  bool valid;
};

Decoded decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1, true};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, 1, false};
  }
  if (i + len > s.size()) return {0xFFFD, 1, false};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong forms, surrogates and out-of-range values.
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
      (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
      (cp >= 0xD800 && cp <= 0xDFFF)) {
    return {0xFFFD, 1, false};
  }
  return {cp, len, true};
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    if (cp <= 0x20 || cp == 0x7F) return CharClass::kSpace;
    if ((cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') ||
        (cp >= 'a' && cp <= 'z')) {
      return CharClass::kWord;
    }
    return CharClass::kMark;
  }
  if (in(cp, 0x80, 0xA0) || cp == 0x1680 || in(cp, 0x2000, 0x200B) ||
      cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
      cp == 0x3000 || cp == 0xFEFF) {
    return CharClass::kSpace;
  }
  // Latin-1 punctuation and symbols, except ordinal indicators, superscript
  // digits, micro sign and vulgar fractions.
  if (in(cp, 0xA1, 0xBF)) {
    switch (cp) {
      case 0xAA: case 0xB2: case 0xB3: case 0xB5: case 0xB9: case 0xBA:
      case 0xBC: case 0xBD: case 0xBE:
        return CharClass::kWord;
      default:
        return CharClass::kMark;
    }
  }
  if (cp == 0xD7 || cp == 0xF7) return CharClass::kMark;
  if (in(cp, 0x2010, 0x2027) || in(cp, 0x2030, 0x205E) ||
      in(cp, 0x20A0, 0x20CF) || in(cp, 0x2190, 0x2BFF) ||
      in(cp, 0x3001, 0x3004) || in(cp, 0x3008, 0x3020) || cp == 0x3030 ||
      in(cp, 0x303D, 0x303F) || in(cp, 0xFE10, 0xFE1F) ||
      in(cp, 0xFE30, 0xFE6F) || in(cp, 0xFF01, 0xFF0F) ||
      in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) ||
      in(cp, 0xFF5B, 0xFF65) || in(cp, 0xFFF9, 0xFFFD) ||
      in(cp, 0x1F000, 0x1FAFF)) {
    return CharClass::kMark;
  }
  return CharClass::kWord;
}

}  // namespace

TokenScheme parse_scheme(std::string_view name) {
  if (name == "bytes") return TokenScheme::kBytes;
  if (name == "unicode-words") return TokenScheme::kUnicodeWords;
  if (name == "bpe") return TokenScheme::kBpe;
  throw ConfigError("unknown token scheme '" + std::string(name) +
                    "' (expected bytes, unicode-words or bpe)");
}

std::string_view scheme_name(TokenScheme scheme) {
  switch (scheme) {
    case TokenScheme::kBytes: return "bytes";
    case TokenScheme::kUnicodeWords: return "unicode-words";
    case TokenScheme::kBpe: return "bpe";
  }
  return "unknown";
}

nlohmann::json TokenCounterSpec::to_json() const {
  nlohmann::json j;
  j["scheme"] = scheme_name(scheme);
  j["bpe_definition_path"] = bpe_definition_path
                                 ? nlohmann::json(bpe_definition_path->string())
                                 : nlohmann::json(nullptr);
  return j;
}

TokenCounterSpec TokenCounterSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("scheme") || !j["scheme"].is_string()) {
    throw ConfigError("counter spec needs a string 'scheme'");
  }
  TokenCounterSpec spec;
  spec.scheme = parse_scheme(j["scheme"].get<std::string>());
  if (auto it = j.find("bpe_definition_path");
      it != j.end() && !it->is_null()) {
    spec.bpe_definition_path = it->get<std::string>();
  }
  return spec;
}

std::vector<std::string_view> code_points(std::string_view text) {
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < text.size();) {
    const Decoded d = decode_utf8(text, i);
    out.push_back(text.substr(i, d.len));
    i += d.len;
  }
  return out;
}

std::vector<std::string_view> unicode_words(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t run_start = std::string_view::npos;
  std::size_t i = 0;
  auto close_run = [&](std::size_t end) {
    if (run_start != std::string_view::npos) {
      tokens.push_back(text.substr(run_start, end - run_start));
      run_start = std::string_view::npos;
    }
  };
  while (i < text.size()) {
    const Decoded d = decode_utf8(text, i);
    const CharClass c = d.valid ? classify(d.cp) : CharClass::kWord;
    switch (c) {
      case CharClass::kWord:
        if (run_start == std::string_view::npos) run_start = i;
        break;
      case CharClass::kSpace:
        close_run(i);
        break;
      case CharClass::kMark:
        close_run(i);
        tokens.push_back(text.substr(i, d.len));
        break;
    }
    i += d.len;
  }
  close_run(text.size());
  return tokens;
}

BpeModel BpeModel::from_json(const nlohmann::json& definition) {
  if (!definition.is_object() || !definition.contains("merges") ||
      !definition["merges"].is_array()) {
    throw ConfigError("BPE definition must be an object with a 'merges' array");
  }
  std::unordered_set<std::string> vocab;
  const bool has_vocab = definition.contains("vocab");
  if (has_vocab) {
    if (!definition["vocab"].is_array()) {
      throw ConfigError("BPE 'vocab' must be an array of strings");
    }
    for (const auto& v : definition["vocab"]) {
      if (!v.is_string()) throw ConfigError("BPE 'vocab' entries must be strings");
      vocab.insert(v.get<std::string>());
    }
  }
  BpeModel model;
  std::unordered_set<std::string> produced;
  auto known_operand = [&](const std::string& s) {
    return code_points(s).size() == 1 || produced.count(s) > 0;
  };
  std::size_t rank = 0;
  for (const auto& m : definition["merges"]) {
    if (!m.is_string()) throw ConfigError("BPE merges must be strings");
    const auto rule = m.get<std::string>();
    const auto space = rule.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= rule.size() ||
        rule.find(' ', space + 1) != std::string::npos) {
      throw ConfigError("BPE merge " + std::to_string(rank) +
                        " must be two symbols separated by one space: '" +
                        rule + "'");
    }
    const std::string left = rule.substr(0, space);
    const std::string right = rule.substr(space + 1);
    if (!known_operand(left) || !known_operand(right)) {
      throw ConfigError("BPE merge " + std::to_string(rank) + " ('" + rule +
                        "') uses a symbol no earlier merge produces");
    }
    if (has_vocab && (!vocab.count(left) || !vocab.count(right) ||
                      !vocab.count(left + right))) {
      throw ConfigError("BPE merge " + std::to_string(rank) + " ('" + rule +
                        "') references symbols missing from the vocabulary");
    }
    if (!model.ranks_.emplace(rule, rank).second) {
      throw ConfigError("duplicate BPE merge '" + rule + "'");
    }
    produced.insert(left + right);
    ++rank;
  }
  return model;
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read BPE definition: ") + e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("BPE definition " + path.string() +
                      " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::vector<std::string> BpeModel::segment_word(std::string_view word) const {
  std::vector<std::string> symbols;
  for (auto cp : code_points(word)) symbols.emplace_back(cp);
  std::string key;
  for (;;) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      key.assign(symbols[i]).append(1, ' ').append(symbols[i + 1]);
      if (auto it = ranks_.find(key); it != ranks_.end() && it->second < best) {
        best = it->second;
      }
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    // Merge every occurrence of the winning pair, left to right.
    std::vector<std::string> merged;
    merged.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size();) {
      if (i + 1 < symbols.size()) {
        key.assign(symbols[i]).append(1, ' ').append(symbols[i + 1]);
        auto it = ranks_.find(key);
        if (it != ranks_.end() && it->second == best) {
          merged.push_back(symbols[i] + symbols[i + 1]);
          i += 2;
          continue;
        }
      }
      merged.push_back(std::move(symbols[i]));
      ++i;
    }
    symbols = std::move(merged);
  }
  return symbols;
}

std::size_t BpeModel::count_word(std::string_view word) const {
  return segment_word(word).size();
}

TokenCounter::TokenCounter(TokenCounterSpec spec) : spec_(std::move(spec)) {
  if (spec_.scheme == TokenScheme::kBpe) {
    if (!spec_.bpe_definition_path) {
      throw ConfigError("bpe scheme requires a definition path");
    }
    std::string bytes;
    try {
      bytes = read_file(*spec_.bpe_definition_path);
    } catch (const IoError& e) {
      throw ConfigError(std::string("cannot read BPE definition: ") + e.what());
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("BPE definition is not valid JSON: " +
                        std::string(e.what()));
    }
    bpe_ = std::make_shared<const BpeModel>(BpeModel::from_json(j));
    definition_sha256_ = sha256_hex(bytes);
  } else if (spec_.bpe_definition_path) {
    throw ConfigError("only the bpe scheme accepts a definition path");
  }
}

std::int64_t TokenCounter::count(std::string_view text) const {
  switch (spec_.scheme) {
    case TokenScheme::kBytes:
      return static_cast<std::int64_t>(text.size());
    case TokenScheme::kUnicodeWords:
      return static_cast<std::int64_t>(unicode_words(text).size());
    case TokenScheme::kBpe: {
      std::int64_t n = 0;
      for (auto word : unicode_words(text)) {
        n += static_cast<std::int64_t>(bpe_->count_word(word));
      }
      return n;
    }
  }
  return 0;
}

std::string TokenCounter::counter_hash() const {
  return sha256_hex(std::string(scheme_name(spec_.scheme)) + "\n" +
                    definition_sha256_.value_or(""));
}

}  // namespace iftkit::corpus
