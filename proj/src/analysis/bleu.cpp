#include "iftkit/analysis/bleu.hpp"

#include <algorithm>
#include <cmath>

#include "iftkit/corpus/tokenizer.hpp"

namespace iftkit::analysis {

std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start,
                      std::size_t n) {
  std::string key = tokens[start];
  for (std::size_t i = 1; i < n; ++i) {
    key += '\x1f';
    key += tokens[start + i];
  }
  return key;
}

NgramProfile NgramProfile::from_tokens(std::vector<std::string> tokens, int max_n) {
  NgramProfile p;
  p.tokens = std::move(tokens);
  p.counts.resize(static_cast<std::size_t>(max_n));
  for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n); ++n) {
    if (p.tokens.size() < n) break;
    auto& m = p.counts[n - 1];
    for (std::size_t i = 0; i + n <= p.tokens.size(); ++i) ++m[ngram_key(p.tokens, i, n)];
  }
  return p;
}

NgramProfile NgramProfile::build(std::string_view text, int max_n) {
  std::vector<std::string> tokens;
  for (auto t : corpus::unicode_words(text)) tokens.emplace_back(t);
  return from_tokens(std::move(tokens), max_n);
}

BleuScore bleu(const NgramProfile& candidate, const NgramProfile& reference, int max_n) {
  BleuScore score;
  const std::size_t c = candidate.length();
  const std::size_t r = reference.length();
  if (c == 0 || r == 0) {
    score.empty_input = true;
    return score;
  }
  const std::size_t orders = std::min<std::size_t>(
      std::min<std::size_t>(static_cast<std::size_t>(max_n), c),
      std::min(candidate.counts.size(), reference.counts.size()));
  double log_sum = 0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto& cand = candidate.counts[n - 1];
    const auto& ref = reference.counts[n - 1];
    long matches = 0;
    for (const auto& [gram, count] : cand) {
      if (auto it = ref.find(gram); it != ref.end()) matches += std::min(count, it->second);
    }
    if (matches == 0) return score;
    const auto total = static_cast<double>(c - n + 1);
    log_sum += std::log(static_cast<double>(matches) / total);
  }
  const double brevity =
      c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  score.value = 100.0 * brevity * std::exp(log_sum / static_cast<double>(orders));
  return score;
}

BleuScore bleu(std::string_view candidate, std::string_view reference, int max_n) {
  return bleu(NgramProfile::build(candidate, max_n), NgramProfile::build(reference, max_n),
              max_n);
}

}  // namespace iftkit::analysis
