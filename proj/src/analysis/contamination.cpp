#include "iftkit/analysis/contamination.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "iftkit/common/error.hpp"

namespace iftkit::analysis {

nlohmann::ordered_json ContaminationHit::to_json() const {
  nlohmann::ordered_json j;
  j["train_id"] = train_id;
  j["eval_id"] = eval_id;
  j["bleu"] = bleu;
  j["matched_ngram_sample"] = matched_ngram_sample;
  return j;
}

ScanField parse_scan_field(std::string_view name) {
  if (name == "prompt") return ScanField::kPrompt;
  if (name == "output") return ScanField::kOutput;
  if (name == "all") return ScanField::kAll;
  throw UsageError("unknown scan field '" + std::string(name) +
                   "' (expected prompt, output or all)");
}

std::string scan_text(const corpus::InstructionRecord& record, ScanField field) {
  switch (field) {
    case ScanField::kPrompt: return corpus::prompt_text(record);
    case ScanField::kOutput: return record.output;
    case ScanField::kAll: return corpus::prompt_text(record) + "\n\n" + record.output;
  }
  return {};
}

namespace {

std::string sample_of(const NgramProfile& cand, const NgramProfile& ref, int max_n) {
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(max_n), cand.length());
  if (n == 0) return {};
  const auto& ref_counts = ref.counts[n - 1];
  for (std::size_t i = 0; i + n <= cand.length(); ++i) {
    if (ref_counts.count(ngram_key(cand.tokens, i, n))) {
      std::string out = cand.tokens[i];
      for (std::size_t k = 1; k < n; ++k) out += " " + cand.tokens[i + k];
      return out;
    }
  }
  return {};
}

}  // namespace

std::vector<ContaminationHit> contamination_scan(const corpus::Records& train,
                                                 const corpus::Records& eval,
                                                 const ScanOptions& options) {
  if (options.max_n < 1) throw ValidationError("max_n must be >= 1");
  const auto max_n = static_cast<std::size_t>(options.max_n);

  std::vector<NgramProfile> train_profiles;
  train_profiles.reserve(train.size());
  for (const auto& r : train) {
    train_profiles.push_back(NgramProfile::build(scan_text(r, options.field), options.max_n));
  }
  std::vector<NgramProfile> eval_profiles;
  eval_profiles.reserve(eval.size());
  for (const auto& r : eval) {
    eval_profiles.push_back(NgramProfile::build(scan_text(r, options.field), options.max_n));
  }

  // max_n-gram -> train indices containing it.
  std::unordered_map<std::string_view, std::vector<std::size_t>> postings;
  if (options.prefilter) {
    for (std::size_t t = 0; t < train_profiles.size(); ++t) {
      const auto& p = train_profiles[t];
      if (p.length() < max_n) continue;
      for (const auto& [gram, _] : p.counts[max_n - 1]) postings[gram].push_back(t);
    }
  }

  std::vector<ContaminationHit> hits;
  std::mutex hits_mu;
  auto scan_one = [&](std::size_t e, std::vector<char>& seen,
                      std::vector<ContaminationHit>& local) {
    const auto& cand = eval_profiles[e];
    auto check = [&](std::size_t t) {
      const auto score = bleu(cand, train_profiles[t], options.max_n);
      if (score.value > options.threshold) {
        local.push_back({train[t].id, eval[e].id, score.value,
                         sample_of(cand, train_profiles[t], options.max_n)});
      }
    };
    if (!options.prefilter || cand.length() < max_n) {
      for (std::size_t t = 0; t < train_profiles.size(); ++t) check(t);
      return;
    }
    std::vector<std::size_t> candidates;
    for (const auto& [gram, _] : cand.counts[max_n - 1]) {
      auto it = postings.find(gram);
      if (it == postings.end()) continue;
      for (auto t : it->second) {
        if (!seen[t]) {
          seen[t] = 1;
          candidates.push_back(t);
        }
      }
    }
    for (auto t : candidates) {
      seen[t] = 0;
      check(t);
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(eval.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::vector<char> seen(train_profiles.size(), 0);
    std::vector<ContaminationHit> local;
    for (std::size_t e = next.fetch_add(1); e < eval_profiles.size(); e = next.fetch_add(1)) {
      scan_one(e, seen, local);
    }
    std::lock_guard lock(hits_mu);
    hits.insert(hits.end(), std::make_move_iterator(local.begin()),
                std::make_move_iterator(local.end()));
  };
  if (!eval.empty()) {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }

  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.bleu != b.bleu) return a.bleu > b.bleu;
    if (a.train_id != b.train_id) return a.train_id < b.train_id;
    return a.eval_id < b.eval_id;
  });
  return hits;
}

}  // namespace iftkit::analysis
