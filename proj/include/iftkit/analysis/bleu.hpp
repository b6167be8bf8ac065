#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iftkit::analysis {

inline constexpr int kMaxBleuOrder = 4;

// n-gram counts of one tokenized text, for orders 1..max_n.
struct NgramProfile {
  std::vector<std::string> tokens;
  std::vector<std::unordered_map<std::string, int>> counts;  // counts[n-1]

  static NgramProfile build(std::string_view text, int max_n = kMaxBleuOrder);
  static NgramProfile from_tokens(std::vector<std::string> tokens,
                                  int max_n = kMaxBleuOrder);
  std::size_t length() const { return tokens.size(); }
};

// Tokens of an n-gram joined with U+001F; the key used in NgramProfile.
std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start,
                      std::size_t n);

struct BleuScore {
  double value = 0;          // in [0, 100]
  bool empty_input = false;  // set when either side has no tokens
};

// Sentence BLEU over unicode-words tokens without smoothing: geometric mean of
// clipped n-gram precisions for n = 1..min(max_n, |candidate|), times the
// brevity penalty. Any order with zero matches gives 0.
BleuScore bleu(std::string_view candidate, std::string_view reference,
               int max_n = kMaxBleuOrder);
BleuScore bleu(const NgramProfile& candidate, const NgramProfile& reference,
               int max_n = kMaxBleuOrder);

}  // namespace iftkit::analysis
