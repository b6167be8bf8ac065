#include "iftkit/corpus/validate.hpp"

#include <set>
#include <unordered_set>
#include <utility>

namespace iftkit::corpus {

namespace {

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

nlohmann::ordered_json ValidationReport::to_json() const {
  nlohmann::ordered_json j;
  j["clean"] = clean();
  j["counts"] = {{"empty_outputs", empty_outputs.size()},
                 {"duplicate_ids", duplicate_ids.size()},
                 {"duplicate_pairs", duplicate_pairs.size()}};
  j["empty_outputs"] = empty_outputs;
  j["duplicate_ids"] = duplicate_ids;
  j["duplicate_pairs"] = duplicate_pairs;
  return j;
}

ValidationReport validate(const Records& records) {
  ValidationReport report;
  std::unordered_set<std::string> ids;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : records) {
    if (blank(r.output)) report.empty_outputs.push_back(r.id);
    if (!ids.insert(r.id).second) report.duplicate_ids.push_back(r.id);
    if (!pairs.emplace(r.instruction, r.input).second) {
      report.duplicate_pairs.push_back(r.id);
    }
  }
  return report;
}

Records exclude_flagged(const Records& records) {
  Records kept;
  std::unordered_set<std::string> ids;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : records) {
    if (blank(r.output)) continue;
    if (ids.count(r.id) || pairs.count({r.instruction, r.input})) continue;
    ids.insert(r.id);
    pairs.emplace(r.instruction, r.input);
    kept.push_back(r);
  }
  return kept;
}

}  // namespace iftkit::corpus
