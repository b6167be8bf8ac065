#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/corpus/record.hpp"

namespace iftkit::select {

using corpus::InstructionRecord;
using corpus::Records;

enum class Strategy { kLongest, kShortest, kRandom, kScoreThreshold, kStratifiedLongest };

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy strategy);

// Ties on the primary key are always broken by ascending id.
inline constexpr std::string_view kTieBreak = "primary_key_then_id_asc";

struct SelectionSpec {
  Strategy strategy = Strategy::kLongest;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;   // random only
  std::optional<double> threshold;     // score_threshold only
  bool source_field_required = false;  // stratified_longest only

  // Throws ValidationError when strategy-specific fields are missing or
  // present where they do not belong.
  void check() const;

  nlohmann::ordered_json to_json() const;
  static SelectionSpec from_json(const nlohmann::json& j);
};

struct SelectionResult {
  SelectionSpec spec;
  std::vector<std::string> selected_ids;
  std::string corpus_manifest_hash;

  nlohmann::ordered_json to_json() const;
  static SelectionResult from_json(const nlohmann::json& j);
};

// Digest identifying the exact corpus a selection was drawn from.
std::string corpus_fingerprint(const Records& records);

SelectionResult select_longest(const Records& records, std::size_t k);
SelectionResult select_shortest(const Records& records, std::size_t k);
SelectionResult select_random(const Records& records, std::size_t k,
                              std::uint64_t seed);
SelectionResult filter_by_score(const Records& records, double threshold);
SelectionResult stratified_longest(const Records& records, std::size_t k);

// Largest-remainder apportionment of k over sources (k clipped to the corpus
// size). Remainder ties go to the larger source, then the smaller name.
std::map<std::string, std::size_t> stratified_quotas(const Records& records,
                                                     std::size_t k);

// Dispatches on spec.strategy after spec.check().
SelectionResult run_selection(const Records& records, const SelectionSpec& spec);

// The selected records, in selection order. Throws PreconditionError if an id
// is not present in `records`.
Records materialize(const Records& records, const SelectionResult& selection);

struct OverlapReport {
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  std::size_t shared = 0;
  double jaccard = 0;
  // Score histogram at 0.5 granularity, keyed by bucket lower edge
  // (1.0, 1.5, ..., 5.0). Records without a score go to *_unscored.
  std::map<double, std::size_t> scores_a;
  std::map<double, std::size_t> scores_b;
  std::size_t unscored_a = 0;
  std::size_t unscored_b = 0;

  nlohmann::ordered_json to_json() const;
};

// Throws ValidationError when the selections come from different corpora.
OverlapReport selection_overlap(const SelectionResult& a,
                                const SelectionResult& b,
                                const Records& records);

}  // namespace iftkit::select
