#include "iftkit/refine/introspection.hpp"

#include <unordered_map>

#include "iftkit/common/files.hpp"

namespace iftkit::refine {

namespace {

const std::vector<std::string_view>& reserved_labels() {
  static const std::vector<std::string_view> labels = {
      "### Instruction:", "### Original Response:", kReviewDelimiter,
      kResponseDelimiter};
  return labels;
}

oracle::ChatRequest make_request(const std::string& prompt,
                                 const RefineOptions& options,
                                 std::uint32_t sample_index) {
  oracle::ChatRequest req;
  req.messages.push_back({oracle::Role::kUser, prompt});
  req.temperature = options.temperature;
  req.max_tokens = options.max_tokens;
  req.sample_index = sample_index;
  return req;
}

}  // namespace

void check_introspection_template(const PromptTemplate& tmpl) {
  const std::string& t = tmpl.text();
  for (auto name : {"instruction", "original_response"}) {
    if (tmpl.placeholder_count(name) != 1) {
      throw ConfigError("template " + tmpl.id() + " must contain {" + name +
                        "} exactly once");
    }
  }
  for (auto delim : {kReviewDelimiter, kResponseDelimiter}) {
    if (count_line_starts(t, delim) != 1) {
      throw ConfigError("template " + tmpl.id() + " must start exactly one line with '" +
                        std::string(delim) + "'");
    }
  }
  const auto review = find_line_start(t, kReviewDelimiter);
  const auto response = find_line_start(t, kResponseDelimiter);
  const auto last_placeholder =
      std::max(t.find("{instruction}"), t.find("{original_response}"));
  if (!(last_placeholder < review && review < response)) {
    throw ConfigError("template " + tmpl.id() +
                      " must place the review and response delimiters, in that "
                      "order, after the embedded instruction and response");
  }
}

IntrospectionPrompt build_introspection_prompt(
    const corpus::InstructionRecord& record, const PromptTemplate& tmpl) {
  check_introspection_template(tmpl);
  IntrospectionPrompt prompt;
  prompt.template_id = tmpl.id();
  prompt.rendered = tmpl.render(
      {{"instruction", quote_if_reserved(corpus::prompt_text(record), reserved_labels())},
       {"original_response", quote_if_reserved(record.output, reserved_labels())}});
  return prompt;
}

ParsedRefinement parse_refinement(std::string_view raw) {
  const auto review_at = raw.find(kReviewDelimiter);
  if (review_at == std::string_view::npos) {
    throw RefinementParseError("completion lacks '" + std::string(kReviewDelimiter) + "'",
                               std::string(raw));
  }
  const auto body_at = review_at + kReviewDelimiter.size();
  const auto response_at = raw.find(kResponseDelimiter, body_at);
  if (response_at == std::string_view::npos) {
    throw RefinementParseError(
        "completion lacks '" + std::string(kResponseDelimiter) + "' after the review",
        std::string(raw));
  }
  ParsedRefinement parsed;
  parsed.review = std::string(trim(raw.substr(body_at, response_at - body_at)));
  parsed.refined_output =
      std::string(trim(raw.substr(response_at + kResponseDelimiter.size())));
  if (parsed.review.empty()) {
    throw RefinementParseError("completion has an empty review", std::string(raw));
  }
  if (parsed.refined_output.empty()) {
    throw RefinementParseError("completion has an empty improved response",
                               std::string(raw));
  }
  return parsed;
}

nlohmann::ordered_json RefinementResult::to_json() const {
  nlohmann::ordered_json j;
  j["record_id"] = record_id;
  j["status"] = status;
  j["review"] = review;
  j["refined_output"] = refined_output;
  j["oracle_model_id"] = oracle_model_id;
  j["prompt_template_id"] = prompt_template_id;
  j["request_digest"] = request_digest;
  j["created_at"] = created_at;
  j["oracle_calls"] = oracle_calls;
  j["errors"] = errors;
  return j;
}

std::size_t RefineOutcome::unrefined_count() const {
  std::size_t n = 0;
  for (const auto& p : provenance) n += !p.refined();
  return n;
}

std::vector<oracle::ChatRequest> planned_refinement_requests(
    const corpus::Records& selected, const RefineOptions& options,
    const PromptTemplate& tmpl) {
  std::vector<oracle::ChatRequest> requests;
  requests.reserve(selected.size());
  for (const auto& r : selected) {
    requests.push_back(make_request(build_introspection_prompt(r, tmpl).rendered,
                                    options, 0));
  }
  return requests;
}

RefineOutcome refine_dataset(const select::SelectionResult& selection,
                             const corpus::Records& records,
                             const oracle::OracleClient& client,
                             const RefineOptions& options,
                             const PromptTemplate& tmpl) {
  check_introspection_template(tmpl);
  RefineOutcome outcome;
  outcome.records = select::materialize(records, selection);
  const std::size_t n = outcome.records.size();

  std::vector<std::string> prompts;
  prompts.reserve(n);
  outcome.provenance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    prompts.push_back(build_introspection_prompt(outcome.records[i], tmpl).rendered);
    auto& row = outcome.provenance[i];
    row.record_id = outcome.records[i].id;
    row.status = "unrefined";
    row.oracle_model_id = client.config().model_id;
    row.prompt_template_id = tmpl.id();
  }

  // Indices still waiting for a well-formed completion.
  std::vector<std::size_t> pending(n);
  for (std::size_t i = 0; i < n; ++i) pending[i] = i;

  for (int round = 0; round <= options.max_reasks && !pending.empty(); ++round) {
    std::vector<oracle::ChatRequest> requests;
    requests.reserve(pending.size());
    for (auto i : pending) {
      requests.push_back(
          make_request(prompts[i], options, static_cast<std::uint32_t>(round)));
    }
    const auto batch = client.chat_batch(requests);
    std::vector<std::size_t> retry;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      const std::size_t i = pending[k];
      auto& row = outcome.provenance[i];
      const auto& item = batch.items[k];
      ++row.oracle_calls;
      if (!item.ok()) {
        // Transport failures were already retried by the client.
        row.errors.push_back(std::string(oracle::failure_class_name(*item.failure)) +
                             ": " + item.error);
        continue;
      }
      row.request_digest = item.response->request_digest;
      try {
        auto parsed = parse_refinement(item.response->content);
        row.status = "refined";
        row.review = std::move(parsed.review);
        row.refined_output = std::move(parsed.refined_output);
      } catch (const RefinementParseError& e) {
        row.errors.push_back(std::string("parse: ") + e.what());
        retry.push_back(i);
      }
    }
    pending = std::move(retry);
  }

  const std::string now = rfc3339_now();
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = outcome.provenance[i];
    row.created_at = now;
    if (!row.refined()) continue;
    auto& rec = outcome.records[i];
    rec.output = row.refined_output;
    // Annotations described the original output.
    rec.response_tokens.reset();
    rec.score.reset();
  }
  return outcome;
}

std::string provenance_jsonl(const std::vector<RefinementResult>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

}  // namespace iftkit::refine
