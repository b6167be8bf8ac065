#include "iftkit/judge/evaluation.hpp"

#include <cstdio>
#include <sstream>

#include "iftkit/common/files.hpp"

namespace iftkit::judge {

namespace detail {
void record_judgment(PairJudgment& pair, Order order, const oracle::BatchItem& item);
}

using ordered_json = nlohmann::ordered_json;

const std::vector<std::pair<std::string, std::size_t>>& standard_eval_sets() {
  static const std::vector<std::pair<std::string, std::size_t>> sets = {
      {"LIMA", 300}, {"Vicuna", 80}, {"Koala", 180}, {"WizardLM", 218},
      {"Self-Instruct", 252}};
  return sets;
}

std::vector<EvalSet> eval_sets_from_json(const ordered_json& j) {
  if (!j.is_object()) {
    throw SchemaError("evaluation sets must be a JSON object of name -> instructions");
  }
  std::vector<EvalSet> sets;
  for (const auto& [name, items] : j.items()) {
    if (!items.is_array()) {
      throw SchemaError("evaluation set '" + name + "' must be an array");
    }
    EvalSet set{name, {}};
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& item = items[i];
      if (!item.is_object() || !item.contains("instruction_id") ||
          !item.contains("instruction") || !item["instruction"].is_string()) {
        throw SchemaError("evaluation set '" + name + "' item " + std::to_string(i) +
                          ": needs 'instruction_id' and 'instruction'");
      }
      const auto& id = item["instruction_id"];
      set.instructions.push_back(
          {id.is_string() ? id.get<std::string>() : id.dump(),
           item["instruction"].get<std::string>()});
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<EvalSet> load_eval_sets(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }
  return eval_sets_from_json(j);
}

ordered_json eval_sets_to_json(const std::vector<EvalSet>& sets) {
  ordered_json j = ordered_json::object();
  for (const auto& s : sets) {
    ordered_json items = ordered_json::array();
    for (const auto& i : s.instructions) {
      items.push_back({{"instruction_id", i.instruction_id},
                       {"instruction", i.instruction}});
    }
    j[s.name] = std::move(items);
  }
  return j;
}

std::vector<std::string> registry_size_warnings(const std::vector<EvalSet>& sets) {
  std::vector<std::string> warnings;
  for (const auto& s : sets) {
    for (const auto& [name, size] : standard_eval_sets()) {
      if (s.name == name && s.instructions.size() != size) {
        warnings.push_back(name + " has " + std::to_string(s.instructions.size()) +
                           " instructions; the published set has " +
                           std::to_string(size));
      }
    }
  }
  return warnings;
}

ResponseSet responses_from_jsonl(std::string_view text, std::string_view origin) {
  ResponseSet set;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string(origin) + ": malformed JSON at line " +
                       std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("instruction_id") || !j.contains("output") ||
        !j["output"].is_string()) {
      throw SchemaError(std::string(origin) + " line " + std::to_string(line_no) +
                        ": needs 'instruction_id' and 'output'");
    }
    const auto& id = j["instruction_id"];
    const std::string key = id.is_string() ? id.get<std::string>() : id.dump();
    if (!set.outputs.emplace(key, j["output"].get<std::string>()).second) {
      throw ValidationError(std::string(origin) + ": duplicate instruction_id " + key);
    }
    if (j.contains("generator") && j["generator"].is_string()) {
      const auto g = j["generator"].get<std::string>();
      if (set.generator.empty()) {
        set.generator = g;
      } else if (set.generator != g) {
        throw ValidationError(std::string(origin) + ": mixes generators '" +
                              set.generator + "' and '" + g + "'");
      }
    }
  }
  return set;
}

ResponseSet load_responses(const std::filesystem::path& path) {
  auto set = responses_from_jsonl(read_file(path), path.string());
  if (set.generator.empty()) set.generator = path.stem().string();
  return set;
}

std::string responses_to_jsonl(const ResponseSet& responses) {
  std::string out;
  for (const auto& [id, output] : responses.outputs) {
    ordered_json j;
    j["instruction_id"] = id;
    j["output"] = output;
    j["generator"] = responses.generator;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void finalize_row(WinRateRow& row) {
  row.n = row.wins + row.ties + row.losses;
  if (row.n == 0) {
    row.win_pct = row.tie_pct = row.lose_pct = 0;
    return;
  }
  const double n = static_cast<double>(row.n);
  row.win_pct = 100.0 * row.wins / n;
  row.tie_pct = 100.0 * row.ties / n;
  row.lose_pct = 100.0 * row.losses / n;
}

namespace {

ordered_json row_json(const WinRateRow& r) {
  ordered_json j;
  j["name"] = r.name;
  j["n"] = r.n;
  j["wins"] = r.wins;
  j["ties"] = r.ties;
  j["losses"] = r.losses;
  j["excluded"] = r.excluded;
  j["win_pct"] = r.win_pct;
  j["tie_pct"] = r.tie_pct;
  j["lose_pct"] = r.lose_pct;
  return j;
}

WinRateRow row_from_json(const nlohmann::json& j) {
  WinRateRow r;
  r.name = j.at("name").get<std::string>();
  r.wins = j.at("wins").get<std::size_t>();
  r.ties = j.at("ties").get<std::size_t>();
  r.losses = j.at("losses").get<std::size_t>();
  r.excluded = j.value("excluded", std::size_t{0});
  finalize_row(r);
  return r;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ordered_json WinRateTable::to_json() const {
  ordered_json j;
  j["model_a"] = model_a;
  j["model_b"] = model_b;
  j["judge_model"] = judge_model;
  j["template_id"] = template_id;
  j["protocol"] = protocol;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) j["rows"].push_back(row_json(r));
  j["overall"] = row_json(overall);
  j["avg_tokens_a"] = avg_tokens_a;
  j["avg_tokens_b"] = avg_tokens_b;
  return j;
}

WinRateTable WinRateTable::from_json(const nlohmann::json& j) {
  try {
    WinRateTable t;
    t.model_a = j.at("model_a").get<std::string>();
    t.model_b = j.at("model_b").get<std::string>();
    t.judge_model = j.value("judge_model", "");
    t.template_id = j.value("template_id", "");
    t.protocol = j.value("protocol", std::string(kProtocolLabel));
    for (const auto& r : j.at("rows")) t.rows.push_back(row_from_json(r));
    t.overall = row_from_json(j.at("overall"));
    t.avg_tokens_a = j.value("avg_tokens_a", 0.0);
    t.avg_tokens_b = j.value("avg_tokens_b", 0.0);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed win-rate table: ") + e.what());
  }
}

std::string WinRateTable::to_markdown() const {
  std::ostringstream md;
  md << "| Set | n | " << model_a << " wins (%) | Tie (%) | " << model_b
     << " wins (%) | Excluded |\n";
  md << "|---|---:|---:|---:|---:|---:|\n";
  auto line = [&](const WinRateRow& r) {
    md << "| " << r.name << " | " << r.n << " | " << fixed(r.win_pct, 2) << " | "
       << fixed(r.tie_pct, 2) << " | " << fixed(r.lose_pct, 2) << " | " << r.excluded
       << " |\n";
  };
  for (const auto& r : rows) line(r);
  line(overall);
  md << "\nAverage response tokens: " << model_a << " " << fixed(avg_tokens_a, 2)
     << ", " << model_b << " " << fixed(avg_tokens_b, 2) << ".\n";
  return md.str();
}

void check_coverage(const std::vector<EvalSet>& sets, const ResponseSet& a,
                    const ResponseSet& b) {
  std::vector<std::string> missing;
  for (const auto& s : sets) {
    for (const auto& i : s.instructions) {
      for (const auto* r : {&a, &b}) {
        auto it = r->outputs.find(i.instruction_id);
        if (it == r->outputs.end() || it->second.empty()) {
          missing.push_back(r->generator + ":" + i.instruction_id);
        }
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "responses missing or empty for " +
                      std::to_string(missing.size()) + " instruction(s):";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
}

std::vector<oracle::ChatRequest> planned_judge_requests(const std::vector<EvalSet>& sets,
                                                        const ResponseSet& a,
                                                        const ResponseSet& b,
                                                        const PairwiseTemplate& tmpl) {
  check_coverage(sets, a, b);
  check_pairwise_template(tmpl);
  std::vector<oracle::ChatRequest> requests;
  for (const auto& s : sets) {
    for (const auto& i : s.instructions) {
      auto [first, second] = pair_requests(i.instruction, a.outputs.at(i.instruction_id),
                                           b.outputs.at(i.instruction_id), tmpl);
      requests.push_back(std::move(first));
      requests.push_back(std::move(second));
    }
  }
  return requests;
}

EvaluationResult evaluate_models(const std::vector<EvalSet>& sets, const ResponseSet& a,
                                 const ResponseSet& b, const oracle::OracleClient& client,
                                 const corpus::TokenCounter& counter,
                                 const PairwiseTemplate& tmpl) {
  const auto requests = planned_judge_requests(sets, a, b, tmpl);
  const auto batch = client.chat_batch(requests);

  EvaluationResult result;
  auto& table = result.table;
  table.model_a = a.generator;
  table.model_b = b.generator;
  table.judge_model = client.config().model_id;
  table.template_id = tmpl.id();
  table.overall.name = "Overall";

  std::size_t k = 0;
  long double tokens_a = 0;
  long double tokens_b = 0;
  std::size_t instructions = 0;
  for (const auto& s : sets) {
    WinRateRow row;
    row.name = s.name;
    for (const auto& i : s.instructions) {
      PairJudgment pair;
      pair.instruction_id = i.instruction_id;
      detail::record_judgment(pair, Order::kAFirst, batch.items[k++]);
      detail::record_judgment(pair, Order::kBFirst, batch.items[k++]);
      if (pair.evaluable()) {
        switch (aggregate_outcome(*pair.a_first, *pair.b_first).verdict) {
          case Verdict::kWin: ++row.wins; break;
          case Verdict::kTie: ++row.ties; break;
          case Verdict::kLose: ++row.losses; break;
        }
      } else {
        ++row.excluded;
      }
      tokens_a += counter.count(a.outputs.at(i.instruction_id));
      tokens_b += counter.count(b.outputs.at(i.instruction_id));
      ++instructions;
      result.pairs.push_back(std::move(pair));
    }
    finalize_row(row);
    table.overall.wins += row.wins;
    table.overall.ties += row.ties;
    table.overall.losses += row.losses;
    table.overall.excluded += row.excluded;
    table.rows.push_back(std::move(row));
  }
  finalize_row(table.overall);
  if (instructions > 0) {
    table.avg_tokens_a = static_cast<double>(tokens_a / instructions);
    table.avg_tokens_b = static_cast<double>(tokens_b / instructions);
  }
  return result;
}

std::string judgment_log_jsonl(const std::vector<PairJudgment>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    for (const auto* j : {&p.a_first, &p.b_first}) {
      if (*j) {
        out += (*j)->to_json().dump();
        out += '\n';
      }
    }
    for (std::size_t e = 0; e < p.errors.size(); ++e) {
      ordered_json j;
      j["instruction_id"] = p.instruction_id;
      j["error"] = p.errors[e];
      out += j.dump();
      out += '\n';
    }
    for (const auto& raw : p.raw_failures) {
      ordered_json j;
      j["instruction_id"] = p.instruction_id;
      j["unparsed_raw_text"] = raw;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

ordered_json export_alpacaeval(const std::vector<EvalInstruction>& instructions,
                               const ResponseSet& responses) {
  ordered_json out = ordered_json::array();
  std::vector<std::string> missing;
  for (const auto& i : instructions) {
    auto it = responses.outputs.find(i.instruction_id);
    if (it == responses.outputs.end()) {
      missing.push_back(i.instruction_id);
      continue;
    }
    ordered_json row;
    row["instruction"] = i.instruction;
    row["output"] = it->second;
    row["generator"] = responses.generator;
    out.push_back(std::move(row));
  }
  if (!missing.empty()) {
    std::string msg = "no response for " + std::to_string(missing.size()) +
                      " AlpacaEval instruction(s):";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  return out;
}

}  // namespace iftkit::judge
