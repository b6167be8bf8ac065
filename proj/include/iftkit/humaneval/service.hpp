#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iftkit/humaneval/study.hpp"

namespace iftkit::humaneval {

// Immutable per-study state; replaced wholesale on every mutation.
struct StudyState {
  std::shared_ptr<const Study> study;
  std::vector<AnnotationResult> results;
  std::set<std::pair<std::string, std::string>> answered;  // (task_id, annotator_id)
};

using StudyMap = std::map<std::string, std::shared_ptr<const StudyState>>;

// Study store backed by an append-only JSON-lines event log. All mutations go
// through one writer; reads take a snapshot and never block on writers.
class HumanEvalService {
 public:
  // Replays `log_path` if it exists. An empty path keeps everything in memory.
  explicit HumanEvalService(std::filesystem::path log_path = {});
  ~HumanEvalService();
  HumanEvalService(const HumanEvalService&) = delete;
  HumanEvalService& operator=(const HumanEvalService&) = delete;

  // Ids are assigned sequentially: study-0001, study-0002, ...
  std::shared_ptr<const Study> create_study(const std::vector<judge::EvalSet>& sets,
                                            const judge::ResponseSet& a,
                                            const judge::ResponseSet& b,
                                            const StudyParams& params);

  // nullopt once the annotator has answered every task. Throws NotFoundError.
  std::optional<TaskView> next_task(std::string_view study_id,
                                    std::string_view annotator_id) const;

  // Throws NotFoundError (study or task), ValidationError (tie under forced
  // choice) or ConflictError (duplicate task/annotator pair). The timestamp
  // is filled in when empty.
  void submit_preference(std::string_view study_id, AnnotationResult result);

  HumanSummary study_results(std::string_view study_id) const;
  std::string rule_text(std::string_view study_id) const;
  std::size_t answered_count(std::string_view study_id, std::string_view annotator_id) const;

  std::shared_ptr<const StudyState> snapshot(std::string_view study_id) const;
  std::vector<std::string> study_ids() const;

 private:
  std::shared_ptr<const StudyMap> load() const;
  void publish(std::shared_ptr<const StudyMap> next);
  void append_event(const nlohmann::ordered_json& event);
  void replay();
  static void apply_result(StudyState& state, const AnnotationResult& result);
  static void check_result(const StudyState& state, const AnnotationResult& result);

  std::filesystem::path log_path_;
  std::FILE* log_ = nullptr;
  std::mutex writer_;
  std::shared_ptr<const StudyMap> studies_;
};

}  // namespace iftkit::humaneval
