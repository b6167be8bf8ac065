#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/judge/evaluation.hpp"

namespace iftkit::humaneval {

struct StudyTask {
  std::string task_id;
  std::string set_name;
  std::string instruction_id;
  std::string instruction;
  bool a_on_left = true;  // server-side only
};

struct Study {
  std::string study_id;
  std::uint64_t seed = 0;
  bool forced_choice = true;
  std::string rule_text;
  std::string model_a;
  std::string model_b;
  std::vector<StudyTask> tasks;
  // Responses for the sampled instructions only, keyed by instruction id.
  std::map<std::string, std::string> responses_a;
  std::map<std::string, std::string> responses_b;

  nlohmann::ordered_json to_json() const;
  static Study from_json(const nlohmann::json& j);

  const StudyTask* find_task(std::string_view task_id) const;
};

struct StudyParams {
  std::size_t n = 100;
  std::uint64_t seed = 0;
  bool forced_choice = true;
  std::optional<std::string> rule_text;  // default: built-in rule banner
};

// Splits n as evenly as possible over sets of the given sizes; a set smaller
// than its share contributes everything and the remainder is spread over the
// rest. Leftover single slots go to the earliest sets with room. Throws
// ValidationError when n exceeds the total.
std::vector<std::size_t> equal_quotas(const std::vector<std::size_t>& sizes, std::size_t n);

// Deterministic given (sets, params.seed). Throws ValidationError listing the
// sampled instruction ids either model lacks.
Study create_study(std::string study_id, const std::vector<judge::EvalSet>& sets,
                   const judge::ResponseSet& a, const judge::ResponseSet& b,
                   const StudyParams& params);

enum class Choice { kLeft, kRight, kTie };
Choice parse_choice(std::string_view s);
std::string_view choice_name(Choice c);

struct AnnotationResult {
  std::string task_id;
  Choice choice = Choice::kLeft;
  std::string annotator_id;
  std::string timestamp;

  nlohmann::ordered_json to_json() const;
  static AnnotationResult from_json(const nlohmann::json& j);
};

enum class Preferred { kModelA, kModelB, kTie };

// Maps a blinded choice back to a model using the task's stored assignment.
Preferred deblind(const StudyTask& task, Choice choice);
// Inverse: the blinded side that corresponds to `preferred` for this task.
Choice reblind(const StudyTask& task, Preferred preferred);

// What the annotator sees. Carries no model identity.
struct TaskView {
  std::size_t index = 0;
  std::size_t total = 0;
  std::string task_id;
  std::string instruction;
  std::string left_text;
  std::string right_text;

  nlohmann::ordered_json to_json() const;
};

TaskView task_view(const Study& study, std::size_t index);

struct HumanSummary {
  std::size_t n = 0;  // results
  bool empty = true;
  std::size_t wins_a = 0;
  std::size_t wins_b = 0;
  std::size_t ties = 0;
  double win_pct_a = 0;  // wins_a / n * 100
  double win_pct_b = 0;
  double tie_pct = 0;
  double tie_adjusted_win_pct_a = 0;  // (wins_a + ties / 2) / n * 100
  // Per-question majority over tasks with at least one result.
  std::size_t questions = 0;
  std::size_t majority_a = 0;
  std::size_t majority_b = 0;
  std::size_t majority_split = 0;

  // Sides are reported as model_a/model_b; model names are not included.
  nlohmann::ordered_json to_json() const;
};

HumanSummary summarize(const Study& study, const std::vector<AnnotationResult>& results);

}  // namespace iftkit::humaneval
