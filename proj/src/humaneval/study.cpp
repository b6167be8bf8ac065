#include "iftkit/humaneval/study.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "iftkit/common/error.hpp"
#include "iftkit/common/resources.hpp"
#include "iftkit/common/rng.hpp"

namespace iftkit::humaneval {

nlohmann::ordered_json Study::to_json() const {
  nlohmann::ordered_json j;
  j["study_id"] = study_id;
  j["seed"] = seed;
  j["forced_choice"] = forced_choice;
  j["rule_text"] = rule_text;
  j["model_a"] = model_a;
  j["model_b"] = model_b;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : tasks) {
    j["tasks"].push_back({{"task_id", t.task_id},
                          {"set", t.set_name},
                          {"instruction_id", t.instruction_id},
                          {"instruction", t.instruction},
                          {"a_on_left", t.a_on_left}});
  }
  j["responses_a"] = responses_a;
  j["responses_b"] = responses_b;
  return j;
}

Study Study::from_json(const nlohmann::json& j) {
  try {
    Study s;
    s.study_id = j.at("study_id").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.forced_choice = j.at("forced_choice").get<bool>();
    s.rule_text = j.at("rule_text").get<std::string>();
    s.model_a = j.at("model_a").get<std::string>();
    s.model_b = j.at("model_b").get<std::string>();
    for (const auto& t : j.at("tasks")) {
      s.tasks.push_back({t.at("task_id").get<std::string>(), t.at("set").get<std::string>(),
                         t.at("instruction_id").get<std::string>(),
                         t.at("instruction").get<std::string>(),
                         t.at("a_on_left").get<bool>()});
    }
    s.responses_a = j.at("responses_a").get<std::map<std::string, std::string>>();
    s.responses_b = j.at("responses_b").get<std::map<std::string, std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("study: ") + e.what());
  }
}

const StudyTask* Study::find_task(std::string_view task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

std::vector<std::size_t> equal_quotas(const std::vector<std::size_t>& sizes, std::size_t n) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (n > total) {
    throw ValidationError("requested " + std::to_string(n) + " instructions but only " +
                          std::to_string(total) + " are available");
  }
  std::vector<std::size_t> quota(sizes.size(), 0);
  std::size_t left = n;
  // Water-filling: raise every open set's quota level by level.
  while (left > 0) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (quota[i] < sizes[i]) open.push_back(i);
    }
    const std::size_t share = left / open.size();
    if (share == 0) {
      for (std::size_t i = 0; i < left; ++i) ++quota[open[i]];
      break;
    }
    for (auto i : open) {
      const std::size_t add = std::min(share, sizes[i] - quota[i]);
      quota[i] += add;
      left -= add;
    }
  }
  return quota;
}

Study create_study(std::string study_id, const std::vector<judge::EvalSet>& sets,
                   const judge::ResponseSet& a, const judge::ResponseSet& b,
                   const StudyParams& params) {
  if (sets.empty()) throw ValidationError("a study needs at least one evaluation set");
  if (params.n == 0) throw ValidationError("a study needs at least one instruction");
  std::vector<std::size_t> sizes;
  for (const auto& s : sets) sizes.push_back(s.instructions.size());
  const auto quotas = equal_quotas(sizes, params.n);

  SplitMix64 root(params.seed);
  SplitMix64 sample_rng = root.split();
  SplitMix64 order_rng = root.split();
  SplitMix64 side_rng = root.split();

  Study study;
  study.study_id = std::move(study_id);
  study.seed = params.seed;
  study.forced_choice = params.forced_choice;
  study.rule_text = params.rule_text ? *params.rule_text : builtin_resource("rule-v1.txt");
  study.model_a = a.generator;
  study.model_b = b.generator;

  for (std::size_t s = 0; s < sets.size(); ++s) {
    std::vector<std::size_t> idx(sets[s].instructions.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < quotas[s]; ++i) {
      std::swap(idx[i], idx[i + sample_rng.below(idx.size() - i)]);
      const auto& ins = sets[s].instructions[idx[i]];
      study.tasks.push_back({"", sets[s].name, ins.instruction_id, ins.instruction, true});
    }
  }
  // Interleave sets so annotators do not see them in blocks.
  for (std::size_t i = study.tasks.size(); i > 1; --i) {
    std::swap(study.tasks[i - 1], study.tasks[order_rng.below(i)]);
  }

  std::vector<std::string> missing;
  for (std::size_t i = 0; i < study.tasks.size(); ++i) {
    auto& t = study.tasks[i];
    char id[32];
    std::snprintf(id, sizeof id, "task-%04zu", i);
    t.task_id = id;
    t.a_on_left = (side_rng.next() >> 63) == 0;
    auto ia = a.outputs.find(t.instruction_id);
    auto ib = b.outputs.find(t.instruction_id);
    if (ia == a.outputs.end() || ia->second.empty()) missing.push_back("a:" + t.instruction_id);
    if (ib == b.outputs.end() || ib->second.empty()) missing.push_back("b:" + t.instruction_id);
    if (!missing.empty()) continue;
    study.responses_a[t.instruction_id] = ia->second;
    study.responses_b[t.instruction_id] = ib->second;
  }
  if (!missing.empty()) {
    std::string msg = "responses missing for sampled instructions:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  return study;
}

Choice parse_choice(std::string_view s) {
  if (s == "left") return Choice::kLeft;
  if (s == "right") return Choice::kRight;
  if (s == "tie") return Choice::kTie;
  throw ValidationError("choice must be left, right or tie");
}

std::string_view choice_name(Choice c) {
  switch (c) {
    case Choice::kLeft: return "left";
    case Choice::kRight: return "right";
    case Choice::kTie: return "tie";
  }
  return "tie";
}

nlohmann::ordered_json AnnotationResult::to_json() const {
  return {{"task_id", task_id},
          {"choice", choice_name(choice)},
          {"annotator_id", annotator_id},
          {"timestamp", timestamp}};
}

AnnotationResult AnnotationResult::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("result must be a JSON object");
  auto str = [&](const char* key, bool required) -> std::string {
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) throw ValidationError(std::string("result: missing field '") + key + "'");
      return "";
    }
    if (!it->is_string()) throw ValidationError(std::string("result: '") + key + "' must be a string");
    return it->get<std::string>();
  };
  AnnotationResult r;
  r.task_id = str("task_id", true);
  r.choice = parse_choice(str("choice", true));
  r.annotator_id = str("annotator_id", true);
  if (r.annotator_id.empty()) throw ValidationError("result: annotator_id is empty");
  r.timestamp = str("timestamp", false);
  return r;
}

Preferred deblind(const StudyTask& task, Choice choice) {
  if (choice == Choice::kTie) return Preferred::kTie;
  const bool left = choice == Choice::kLeft;
  return left == task.a_on_left ? Preferred::kModelA : Preferred::kModelB;
}

Choice reblind(const StudyTask& task, Preferred preferred) {
  if (preferred == Preferred::kTie) return Choice::kTie;
  const bool a = preferred == Preferred::kModelA;
  return a == task.a_on_left ? Choice::kLeft : Choice::kRight;
}

nlohmann::ordered_json TaskView::to_json() const {
  return {{"task_id", task_id},
          {"index", index},
          {"total", total},
          {"instruction", instruction},
          {"left_text", left_text},
          {"right_text", right_text}};
}

TaskView task_view(const Study& study, std::size_t index) {
  const auto& t = study.tasks.at(index);
  const auto& ra = study.responses_a.at(t.instruction_id);
  const auto& rb = study.responses_b.at(t.instruction_id);
  TaskView v;
  v.index = index;
  v.total = study.tasks.size();
  v.task_id = t.task_id;
  v.instruction = t.instruction;
  v.left_text = t.a_on_left ? ra : rb;
  v.right_text = t.a_on_left ? rb : ra;
  return v;
}

nlohmann::ordered_json HumanSummary::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["empty"] = empty;
  j["wins_model_a"] = wins_a;
  j["wins_model_b"] = wins_b;
  j["ties"] = ties;
  j["win_pct_model_a"] = win_pct_a;
  j["win_pct_model_b"] = win_pct_b;
  j["tie_pct"] = tie_pct;
  j["tie_adjusted_win_pct_model_a"] = tie_adjusted_win_pct_a;
  j["per_question"] = {{"questions", questions},
                       {"majority_model_a", majority_a},
                       {"majority_model_b", majority_b},
                       {"split", majority_split}};
  return j;
}

HumanSummary summarize(const Study& study, const std::vector<AnnotationResult>& results) {
  HumanSummary s;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_task;
  for (const auto& r : results) {
    const auto* task = study.find_task(r.task_id);
    if (!task) throw NotFoundError("unknown task '" + r.task_id + "'");
    auto& votes = per_task[r.task_id];
    switch (deblind(*task, r.choice)) {
      case Preferred::kModelA: ++s.wins_a; ++votes.first; break;
      case Preferred::kModelB: ++s.wins_b; ++votes.second; break;
      case Preferred::kTie: ++s.ties; break;
    }
    ++s.n;
  }
  s.empty = s.n == 0;
  if (s.n > 0) {
    const double n = static_cast<double>(s.n);
    s.win_pct_a = s.wins_a * 100.0 / n;
    s.win_pct_b = s.wins_b * 100.0 / n;
    s.tie_pct = s.ties * 100.0 / n;
    s.tie_adjusted_win_pct_a = (s.wins_a + s.ties / 2.0) * 100.0 / n;
  }
  s.questions = per_task.size();
  for (const auto& [id, v] : per_task) {
    if (v.first > v.second) ++s.majority_a;
    else if (v.second > v.first) ++s.majority_b;
    else ++s.majority_split;
  }
  return s;
}

}  // namespace iftkit::humaneval
