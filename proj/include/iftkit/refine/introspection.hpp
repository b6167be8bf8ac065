#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/common/error.hpp"
#include "iftkit/common/prompt_template.hpp"
#include "iftkit/corpus/record.hpp"
#include "iftkit/oracle/client.hpp"
#include "iftkit/select/selection.hpp"

namespace iftkit::refine {

inline constexpr std::string_view kReviewDelimiter = "### Review:";
inline constexpr std::string_view kResponseDelimiter = "### Improved Response:";
inline constexpr std::string_view kDefaultTemplateId = "introspection-v1";

// Checks that `tmpl` embeds {instruction} and {original_response} once each
// and carries both section delimiters exactly once, at line starts, in order,
// after the embedded text. Throws ConfigError otherwise.
void check_introspection_template(const PromptTemplate& tmpl);

struct IntrospectionPrompt {
  std::string template_id;
  std::string rendered;
};

IntrospectionPrompt build_introspection_prompt(
    const corpus::InstructionRecord& record,
    const PromptTemplate& tmpl = PromptTemplate::builtin(kDefaultTemplateId));

class RefinementParseError : public ParseError {
 public:
  RefinementParseError(const std::string& message, std::string raw)
      : ParseError(message), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

struct ParsedRefinement {
  std::string review;
  std::string refined_output;
};

// review is the trimmed text between the delimiters, refined_output the
// trimmed text after the second one.
ParsedRefinement parse_refinement(std::string_view raw);

struct RefinementResult {
  std::string record_id;
  std::string status;  // "refined" or "unrefined"
  std::string review;
  std::string refined_output;
  std::string oracle_model_id;
  std::string prompt_template_id;
  std::string request_digest;
  std::string created_at;
  int oracle_calls = 0;          // calls issued for this record (incl. re-asks)
  std::vector<std::string> errors;  // one per failed call, in order

  bool refined() const { return status == "refined"; }
  nlohmann::ordered_json to_json() const;
};

struct RefineOptions {
  int max_reasks = 2;
  double temperature = 0.7;
  int max_tokens = 2048;
};

struct RefineOutcome {
  corpus::Records records;                  // selection order
  std::vector<RefinementResult> provenance;  // parallel to records

  std::size_t unrefined_count() const;
};

// Requests each round's prompts through the client's bounded batch. A record
// whose completion fails to parse is re-asked (fresh sample) up to
// max_reasks times, then passed through unmodified.
RefineOutcome refine_dataset(
    const select::SelectionResult& selection, const corpus::Records& records,
    const oracle::OracleClient& client, const RefineOptions& options = {},
    const PromptTemplate& tmpl = PromptTemplate::builtin(kDefaultTemplateId));

// Requests that the first round of refine_dataset would issue.
std::vector<oracle::ChatRequest> planned_refinement_requests(
    const corpus::Records& selected, const RefineOptions& options,
    const PromptTemplate& tmpl);

std::string provenance_jsonl(const std::vector<RefinementResult>& rows);

}  // namespace iftkit::refine
