#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/corpus/tokenizer.hpp"
#include "iftkit/judge/pairwise.hpp"

namespace iftkit::judge {

struct EvalInstruction {
  std::string instruction_id;
  std::string instruction;
};

struct EvalSet {
  std::string name;
  std::vector<EvalInstruction> instructions;
};

// Published sizes of the five standard head-to-head sets (1030 in total).
const std::vector<std::pair<std::string, std::size_t>>& standard_eval_sets();

// {"LIMA": [{"instruction_id": ..., "instruction": ...}, ...], ...}; set
// order follows the file.
std::vector<EvalSet> load_eval_sets(const std::filesystem::path& path);
std::vector<EvalSet> eval_sets_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json eval_sets_to_json(const std::vector<EvalSet>& sets);

// Warnings for standard set names whose size differs from the published one.
std::vector<std::string> registry_size_warnings(const std::vector<EvalSet>& sets);

// Model outputs keyed by instruction id, from a JSON-lines file of
// {"instruction_id", "output", "generator"}.
struct ResponseSet {
  std::string generator;
  std::map<std::string, std::string> outputs;
};

ResponseSet load_responses(const std::filesystem::path& path);
ResponseSet responses_from_jsonl(std::string_view text, std::string_view origin);
std::string responses_to_jsonl(const ResponseSet& responses);

struct WinRateRow {
  std::string name;
  std::size_t n = 0;  // evaluable pairs
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  std::size_t excluded = 0;
  double win_pct = 0;
  double tie_pct = 0;
  double lose_pct = 0;
};

struct WinRateTable {
  std::string model_a;
  std::string model_b;
  std::string judge_model;
  std::string template_id;
  std::string protocol = std::string(kProtocolLabel);
  std::vector<WinRateRow> rows;  // one per evaluation set
  WinRateRow overall;
  double avg_tokens_a = 0;
  double avg_tokens_b = 0;

  nlohmann::ordered_json to_json() const;
  static WinRateTable from_json(const nlohmann::json& j);
  std::string to_markdown() const;
};

// Fills the percentage fields of `row` from its counts.
void finalize_row(WinRateRow& row);

struct EvaluationResult {
  WinRateTable table;
  std::vector<PairJudgment> pairs;  // set order, then instruction order
};

// Throws ValidationError listing every uncovered id before any oracle call.
void check_coverage(const std::vector<EvalSet>& sets, const ResponseSet& a,
                    const ResponseSet& b);

std::vector<oracle::ChatRequest> planned_judge_requests(
    const std::vector<EvalSet>& sets, const ResponseSet& a, const ResponseSet& b,
    const PairwiseTemplate& tmpl);

EvaluationResult evaluate_models(const std::vector<EvalSet>& sets,
                                 const ResponseSet& a, const ResponseSet& b,
                                 const oracle::OracleClient& client,
                                 const corpus::TokenCounter& counter,
                                 const PairwiseTemplate& tmpl = PairwiseTemplate::builtin());

// Judgment log: one JSON line per parsed judgment, plus one line with an
// "error" field per failed order.
std::string judgment_log_jsonl(const std::vector<PairJudgment>& pairs);

// AlpacaEval-style export: [{"instruction", "output", "generator"}] in the
// order of `instructions`. Throws ValidationError on missing responses.
inline constexpr std::size_t kAlpacaEvalSize = 805;
nlohmann::ordered_json export_alpacaeval(const std::vector<EvalInstruction>& instructions,
                                         const ResponseSet& responses);

}  // namespace iftkit::judge
