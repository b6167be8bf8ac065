#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/judge/evaluation.hpp"

namespace iftkit::analysis {

// Pearson correlation; nullopt when fewer than two points or either series
// has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

struct EpochRow {
  int epoch = 0;  // 1-based
  std::string generator;
  double avg_tokens = 0;
  judge::WinRateRow result;  // win_pct is the win rate versus the baseline
};

struct EpochTable {
  std::string baseline;
  std::string judge_model;
  // Local pairwise judge, not the AlpacaEval 2.0 annotator.
  std::string protocol = std::string(judge::kProtocolLabel);
  std::vector<EpochRow> rows;
  std::optional<double> length_win_correlation;

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
};

// Throws ValidationError when the epoch files do not all cover the same
// instruction ids, or when any of them misses an evaluation instruction.
void check_epoch_coverage(const std::vector<judge::EvalSet>& sets,
                          const std::vector<judge::ResponseSet>& epochs,
                          const judge::ResponseSet& baseline);

EpochTable track_epoch_metrics(const std::vector<judge::EvalSet>& sets,
                               const std::vector<judge::ResponseSet>& epochs,
                               const judge::ResponseSet& baseline,
                               const oracle::OracleClient& client,
                               const corpus::TokenCounter& counter,
                               const judge::PairwiseTemplate& tmpl =
                                   judge::PairwiseTemplate::builtin());

// Builds the table from already-computed rows (fills the correlation).
EpochTable epoch_table(std::string baseline, std::vector<EpochRow> rows);

}  // namespace iftkit::analysis
