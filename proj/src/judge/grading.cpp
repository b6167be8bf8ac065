#include "iftkit/judge/grading.hpp"

#include <cmath>

#include "iftkit/judge/pairwise.hpp"

namespace iftkit::judge {

namespace {

const PromptTemplate& grade_template() {
  static const PromptTemplate t = PromptTemplate::builtin(kDefaultGradeTemplateId);
  return t;
}

const std::string& grade_system() {
  static const std::string s(
      trim(PromptTemplate::builtin(std::string(kDefaultGradeTemplateId) + ".system").text()));
  return s;
}

}  // namespace

double parse_grade(std::string_view raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < '0' || raw[i] > '9') continue;
    std::size_t start = i;
    if (start > 0 && raw[start - 1] == '-') --start;
    while (i < raw.size() && raw[i] >= '0' && raw[i] <= '9') ++i;
    if (i + 1 < raw.size() && raw[i] == '.' && raw[i + 1] >= '0' && raw[i + 1] <= '9') {
      ++i;
      while (i < raw.size() && raw[i] >= '0' && raw[i] <= '9') ++i;
    }
    const double value = std::stod(std::string(raw.substr(start, i - start)));
    if (!(value >= 1.0 && value <= 5.0)) {
      throw GradingError("grade " + std::string(raw.substr(start, i - start)) +
                             " outside [1, 5]",
                         std::string(raw));
    }
    return std::floor(value * 2.0 + 0.5) / 2.0;
  }
  throw GradingError("grader output contains no number", std::string(raw));
}

oracle::ChatRequest grade_request(const corpus::InstructionRecord& record) {
  oracle::ChatRequest req;
  req.messages.push_back({oracle::Role::kSystem, grade_system()});
  const std::vector<std::string_view> labels = {"### Instruction:", "### Input:",
                                                "### Response:"};
  req.messages.push_back(
      {oracle::Role::kUser,
       grade_template().render({{"instruction", quote_if_reserved(record.instruction, labels)},
                                {"input", quote_if_reserved(record.input, labels)},
                                {"response", quote_if_reserved(record.output, labels)}})});
  return req;
}

double grade_pointwise(const corpus::InstructionRecord& record,
                       const oracle::OracleClient& client) {
  return parse_grade(client.chat(grade_request(record)).content);
}

GradingOutcome grade_dataset(const corpus::Records& records,
                             const oracle::OracleClient& client) {
  std::vector<oracle::ChatRequest> requests;
  requests.reserve(records.size());
  for (const auto& r : records) requests.push_back(grade_request(r));
  const auto batch = client.chat_batch(requests);
  GradingOutcome out;
  out.records = records;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& item = batch.items[i];
    // A stale score from an earlier run must not survive a failed regrade.
    out.records[i].score.reset();
    if (!item.ok()) {
      out.failures.emplace_back(records[i].id, item.error);
      continue;
    }
    try {
      out.records[i].score = parse_grade(item.response->content);
    } catch (const GradingError& e) {
      out.failures.emplace_back(records[i].id, e.what());
    }
  }
  return out;
}

}  // namespace iftkit::judge
