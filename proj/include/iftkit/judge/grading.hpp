#pragma once

#include <string>
#include <vector>

#include "iftkit/common/error.hpp"
#include "iftkit/common/prompt_template.hpp"
#include "iftkit/corpus/record.hpp"
#include "iftkit/oracle/client.hpp"

namespace iftkit::judge {

inline constexpr std::string_view kDefaultGradeTemplateId = "grade-v1";

class GradingError : public ParseError {
 public:
  GradingError(const std::string& message, std::string raw)
      : ParseError(message), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

// The first number in the completion; must lie in [1, 5]. Rounded to the
// nearest multiple of 0.5 (halves round up).
double parse_grade(std::string_view raw);

oracle::ChatRequest grade_request(const corpus::InstructionRecord& record);

// Grades one record (1-5 scale) and returns the score.
double grade_pointwise(const corpus::InstructionRecord& record,
                       const oracle::OracleClient& client);

struct GradingOutcome {
  corpus::Records records;  // same order; score set only where grading succeeded
  std::vector<std::pair<std::string, std::string>> failures;  // (id, reason)
};

GradingOutcome grade_dataset(const corpus::Records& records,
                             const oracle::OracleClient& client);

}  // namespace iftkit::judge
