#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/common/error.hpp"
#include "iftkit/common/prompt_template.hpp"
#include "iftkit/corpus/tokenizer.hpp"
#include "iftkit/oracle/client.hpp"

namespace iftkit::judge {

inline constexpr std::string_view kDefaultPairwiseTemplateId = "pairwise-v1";
inline constexpr std::string_view kProtocolLabel = "pairwise-both-orders-score-sum";

// Section labels of the pairwise template; answers that would start a line
// with one of them are quoted.
const std::vector<std::string_view>& pairwise_labels();

// The pairwise prompt: a system message plus the rendered user template.
struct PairwiseTemplate {
  PromptTemplate user;
  std::string system;

  static PairwiseTemplate builtin(std::string_view id = kDefaultPairwiseTemplateId);
  // Loads <path> and, when present, <stem>.system.txt next to it.
  static PairwiseTemplate load(const std::filesystem::path& path);
  const std::string& id() const { return user.id(); }
};

// Throws ConfigError unless {question}, {answer_1} and {answer_2} occur once
// each in that order and every section label starts exactly one line.
void check_pairwise_template(const PairwiseTemplate& tmpl);

std::string build_pairwise_prompt(std::string_view question,
                                  std::string_view answer_first,
                                  std::string_view answer_second,
                                  const PairwiseTemplate& tmpl = PairwiseTemplate::builtin());

class JudgeParseError : public ParseError {
 public:
  JudgeParseError(const std::string& message, std::string raw)
      : ParseError(message), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

// Numeric tokens ([0-9]+(.[0-9]+)?, with an optional leading '-') of the
// first non-empty line.
std::vector<double> first_line_numbers(std::string_view raw);

// The first two numeric tokens of the first non-empty line. Both must lie in
// [1, 10]; otherwise JudgeParseError carrying the raw text.
std::pair<double, double> parse_scores(std::string_view raw);

enum class Order { kAFirst, kBFirst };
std::string_view order_name(Order order);

struct Judgment {
  std::string instruction_id;
  Order order = Order::kAFirst;
  double score_first = 0;
  double score_second = 0;
  std::string raw_text;
  std::string request_digest;

  nlohmann::ordered_json to_json() const;
};

enum class Verdict { kWin, kTie, kLose };
std::string_view verdict_name(Verdict v);

struct PairwiseOutcome {
  std::string instruction_id;
  double total_a = 0;
  double total_b = 0;
  Verdict verdict = Verdict::kTie;  // for model A
};

// total_a = a_first.first + b_first.second, total_b = a_first.second +
// b_first.first. Throws ValidationError when the instruction ids differ.
// Either argument order is accepted; judgments are told apart by `order`.
PairwiseOutcome aggregate_outcome(const Judgment& x, const Judgment& y);

// Both presentations of one instruction. A pair is evaluable only when both
// judgments parsed.
struct PairJudgment {
  std::string instruction_id;
  std::optional<Judgment> a_first;
  std::optional<Judgment> b_first;
  std::vector<std::string> errors;
  std::vector<std::string> raw_failures;  // raw completions that failed to parse

  bool evaluable() const { return a_first && b_first; }
};

// The two requests (a_first, b_first) for one instruction.
std::pair<oracle::ChatRequest, oracle::ChatRequest> pair_requests(
    std::string_view question, std::string_view response_a,
    std::string_view response_b, const PairwiseTemplate& tmpl);

PairJudgment judge_pair(std::string_view instruction_id, std::string_view question,
                        std::string_view response_a, std::string_view response_b,
                        const oracle::OracleClient& client,
                        const PairwiseTemplate& tmpl = PairwiseTemplate::builtin());

}  // namespace iftkit::judge
