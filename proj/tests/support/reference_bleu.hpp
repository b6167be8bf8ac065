#pragma once

// Stand-alone sentence BLEU used as a test oracle. Written from the textbook
// definition without sharing code with the library: ASCII regex tokenizer,
// ordered maps of token vectors, and products instead of log sums.

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <string>
#include <vector>

namespace iftkit::testing {

inline std::vector<std::string> ref_tokenize(const std::string& text) {
  static const std::regex token(R"([A-Za-z0-9]+|[^\sA-Za-z0-9])");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), token);
       it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

inline std::map<std::vector<std::string>, int> ref_ngrams(const std::vector<std::string>& t,
                                                          std::size_t n) {
  std::map<std::vector<std::string>, int> m;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    m[std::vector<std::string>(t.begin() + i, t.begin() + i + n)] += 1;
  }
  return m;
}

// Orders run to min(max_n, candidate length); any order without a clipped
// match gives 0.
inline double reference_bleu(const std::string& candidate, const std::string& reference,
                             std::size_t max_n = 4) {
  const auto c = ref_tokenize(candidate);
  const auto r = ref_tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;
  const std::size_t orders = std::min(max_n, c.size());
  double product = 1.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto cg = ref_ngrams(c, n);
    const auto rg = ref_ngrams(r, n);
    int clipped = 0, total = 0;
    for (const auto& [g, k] : cg) {
      total += k;
      auto it = rg.find(g);
      clipped += it == rg.end() ? 0 : std::min(k, it->second);
    }
    if (clipped == 0) return 0.0;
    product *= static_cast<double>(clipped) / total;
  }
  const double bp = c.size() > r.size() ? 1.0 : std::exp(1.0 - double(r.size()) / double(c.size()));
  return 100.0 * bp * std::pow(product, 1.0 / double(orders));
}

}  // namespace iftkit::testing
