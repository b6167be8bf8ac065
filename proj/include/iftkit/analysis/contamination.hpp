#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/analysis/bleu.hpp"
#include "iftkit/corpus/record.hpp"

namespace iftkit::analysis {

struct ContaminationHit {
  std::string train_id;
  std::string eval_id;
  double bleu = 0;
  std::string matched_ngram_sample;

  nlohmann::ordered_json to_json() const;
};

enum class ScanField { kPrompt, kOutput, kAll };
ScanField parse_scan_field(std::string_view name);

struct ScanOptions {
  double threshold = 20.0;  // hits need bleu strictly above this
  int max_n = kMaxBleuOrder;
  ScanField field = ScanField::kPrompt;
  // Skip pairs that share no max_n-gram. Such pairs score exactly 0 under
  // unsmoothed BLEU, so the prefilter never drops a hit.
  bool prefilter = true;
  unsigned threads = 0;  // 0 = hardware concurrency
};

std::string scan_text(const corpus::InstructionRecord& record, ScanField field);

// All (train, eval) pairs with bleu(eval_text, train_text) > threshold,
// ordered by bleu desc, then train_id, then eval_id.
std::vector<ContaminationHit> contamination_scan(const corpus::Records& train,
                                                 const corpus::Records& eval,
                                                 const ScanOptions& options = {});

}  // namespace iftkit::analysis
