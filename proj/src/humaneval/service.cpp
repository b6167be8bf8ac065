#include "iftkit/humaneval/service.hpp"

#include <unistd.h>

#include <cstdio>

#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"

namespace iftkit::humaneval {

HumanEvalService::HumanEvalService(std::filesystem::path log_path)
    : log_path_(std::move(log_path)), studies_(std::make_shared<StudyMap>()) {
  if (log_path_.empty()) return;
  if (std::filesystem::exists(log_path_)) replay();
  if (log_path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(log_path_.parent_path(), ec);
  }
  log_ = std::fopen(log_path_.c_str(), "ab");
  if (!log_) throw IoError("cannot open event log " + log_path_.string());
}

HumanEvalService::~HumanEvalService() {
  if (log_) std::fclose(log_);
}

std::shared_ptr<const StudyMap> HumanEvalService::load() const {
  return std::atomic_load(&studies_);
}

void HumanEvalService::publish(std::shared_ptr<const StudyMap> next) {
  std::atomic_store(&studies_, std::move(next));
}

void HumanEvalService::append_event(const nlohmann::ordered_json& event) {
  if (!log_) return;
  const std::string line = event.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), log_) != line.size() ||
      std::fflush(log_) != 0 || ::fsync(::fileno(log_)) != 0) {
    throw IoError("cannot append to event log " + log_path_.string());
  }
}

void HumanEvalService::replay() {
  const std::string text = read_file(log_path_);
  auto map = std::make_shared<StudyMap>();
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    ++line_no;
    if (end == std::string::npos) break;  // torn final write
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    nlohmann::json ev;
    try {
      ev = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(log_path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = ev.value("type", "");
    if (type == "study_created") {
      auto state = std::make_shared<StudyState>();
      state->study = std::make_shared<Study>(Study::from_json(ev.at("study")));
      (*map)[state->study->study_id] = std::move(state);
    } else if (type == "result") {
      const std::string id = ev.at("study_id").get<std::string>();
      auto it = map->find(id);
      if (it == map->end()) {
        throw ParseError(log_path_.string() + ":" + std::to_string(line_no) +
                         ": result for unknown study " + id);
      }
      auto next = std::make_shared<StudyState>(*it->second);
      apply_result(*next, AnnotationResult::from_json(ev.at("result")));
      it->second = std::move(next);
    } else {
      throw ParseError(log_path_.string() + ":" + std::to_string(line_no) +
                       ": unknown event type '" + type + "'");
    }
  }
  publish(std::move(map));
}

std::shared_ptr<const Study> HumanEvalService::create_study(
    const std::vector<judge::EvalSet>& sets, const judge::ResponseSet& a,
    const judge::ResponseSet& b, const StudyParams& params) {
  std::lock_guard lock(writer_);
  auto current = load();
  char id[32];
  std::snprintf(id, sizeof id, "study-%04zu", current->size() + 1);
  auto study = std::make_shared<const Study>(humaneval::create_study(id, sets, a, b, params));
  append_event({{"type", "study_created"}, {"study", study->to_json()}});
  auto next = std::make_shared<StudyMap>(*current);
  auto state = std::make_shared<StudyState>();
  state->study = study;
  (*next)[study->study_id] = std::move(state);
  publish(std::move(next));
  return study;
}

std::shared_ptr<const StudyState> HumanEvalService::snapshot(std::string_view study_id) const {
  auto map = load();
  auto it = map->find(std::string(study_id));
  if (it == map->end()) throw NotFoundError("unknown study '" + std::string(study_id) + "'");
  return it->second;
}

std::vector<std::string> HumanEvalService::study_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, s] : *load()) ids.push_back(id);
  return ids;
}

std::optional<TaskView> HumanEvalService::next_task(std::string_view study_id,
                                                    std::string_view annotator_id) const {
  auto state = snapshot(study_id);
  const auto& tasks = state->study->tasks;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!state->answered.count({tasks[i].task_id, std::string(annotator_id)})) {
      return task_view(*state->study, i);
    }
  }
  return std::nullopt;
}

std::size_t HumanEvalService::answered_count(std::string_view study_id,
                                             std::string_view annotator_id) const {
  auto state = snapshot(study_id);
  std::size_t n = 0;
  for (const auto& [task, annotator] : state->answered) n += annotator == annotator_id;
  return n;
}

void HumanEvalService::check_result(const StudyState& state, const AnnotationResult& r) {
  if (!state.study->find_task(r.task_id)) {
    throw NotFoundError("unknown task '" + r.task_id + "'");
  }
  if (r.choice == Choice::kTie && state.study->forced_choice) {
    throw ValidationError("ties are not allowed in a forced-choice study");
  }
  if (state.answered.count({r.task_id, r.annotator_id})) {
    throw ConflictError("annotator '" + r.annotator_id + "' already answered " + r.task_id);
  }
}

void HumanEvalService::apply_result(StudyState& state, const AnnotationResult& r) {
  check_result(state, r);
  state.answered.insert({r.task_id, r.annotator_id});
  state.results.push_back(r);
}

void HumanEvalService::submit_preference(std::string_view study_id, AnnotationResult result) {
  std::lock_guard lock(writer_);
  auto current = load();
  auto it = current->find(std::string(study_id));
  if (it == current->end()) throw NotFoundError("unknown study '" + std::string(study_id) + "'");
  check_result(*it->second, result);
  if (result.timestamp.empty()) result.timestamp = rfc3339_now();
  append_event({{"type", "result"}, {"study_id", study_id}, {"result", result.to_json()}});
  auto state = std::make_shared<StudyState>(*it->second);
  apply_result(*state, result);
  auto next = std::make_shared<StudyMap>(*current);
  (*next)[std::string(study_id)] = std::move(state);
  publish(std::move(next));
}

HumanSummary HumanEvalService::study_results(std::string_view study_id) const {
  auto state = snapshot(study_id);
  return summarize(*state->study, state->results);
}

std::string HumanEvalService::rule_text(std::string_view study_id) const {
  return snapshot(study_id)->study->rule_text;
}

}  // namespace iftkit::humaneval
