#include "iftkit/select/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "iftkit/common/digest.hpp"
#include "iftkit/common/error.hpp"
#include "iftkit/common/rng.hpp"
#include "iftkit/corpus/dataset_io.hpp"

namespace iftkit::select {

namespace {

std::int64_t tokens_of(const InstructionRecord& r) {
  if (!r.response_tokens) {
    throw PreconditionError("record " + r.id +
                            " has no response_tokens; run annotate-lengths first");
  }
  return *r.response_tokens;
}

void require_annotated(const Records& records) {
  for (const auto& r : records) tokens_of(r);
}

// (tokens desc, id asc)
bool longer(const InstructionRecord* a, const InstructionRecord* b) {
  if (*a->response_tokens != *b->response_tokens) {
    return *a->response_tokens > *b->response_tokens;
  }
  return a->id < b->id;
}

// (tokens asc, id asc)
bool shorter(const InstructionRecord* a, const InstructionRecord* b) {
  if (*a->response_tokens != *b->response_tokens) {
    return *a->response_tokens < *b->response_tokens;
  }
  return a->id < b->id;
}

template <typename Less>
std::vector<std::string> top_k(const std::vector<const InstructionRecord*>& pool,
                               std::size_t k, Less less) {
  std::vector<const InstructionRecord*> v = pool;
  k = std::min(k, v.size());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k),
                    v.end(), less);
  std::vector<std::string> ids;
  ids.reserve(k);
  for (std::size_t i = 0; i < k; ++i) ids.push_back(v[i]->id);
  return ids;
}

std::vector<const InstructionRecord*> pointers(const Records& records) {
  std::vector<const InstructionRecord*> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(&r);
  return v;
}

SelectionSpec spec_for(Strategy strategy, std::optional<std::size_t> k) {
  SelectionSpec spec;
  spec.strategy = strategy;
  spec.k = k;
  return spec;
}

SelectionResult make_result(SelectionSpec spec, std::vector<std::string> ids,
                            const Records& records) {
  return SelectionResult{std::move(spec), std::move(ids),
                         corpus_fingerprint(records)};
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "longest") return Strategy::kLongest;
  if (name == "shortest") return Strategy::kShortest;
  if (name == "random") return Strategy::kRandom;
  if (name == "score_threshold") return Strategy::kScoreThreshold;
  if (name == "stratified_longest") return Strategy::kStratifiedLongest;
  throw UsageError("unknown selection strategy '" + std::string(name) + "'");
}

std::string_view strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::kLongest: return "longest";
    case Strategy::kShortest: return "shortest";
    case Strategy::kRandom: return "random";
    case Strategy::kScoreThreshold: return "score_threshold";
    case Strategy::kStratifiedLongest: return "stratified_longest";
  }
  return "unknown";
}

void SelectionSpec::check() const {
  const std::string name(strategy_name(strategy));
  const bool needs_k = strategy != Strategy::kScoreThreshold;
  if (needs_k && (!k || *k == 0)) {
    throw ValidationError(name + " selection needs a positive k");
  }
  if (!needs_k && k) throw ValidationError("score_threshold does not take k");
  if ((strategy == Strategy::kRandom) != seed.has_value()) {
    throw ValidationError(strategy == Strategy::kRandom
                              ? "random selection needs an explicit seed"
                              : name + " selection does not take a seed");
  }
  if ((strategy == Strategy::kScoreThreshold) != threshold.has_value()) {
    throw ValidationError(strategy == Strategy::kScoreThreshold
                              ? "score_threshold selection needs a threshold"
                              : name + " selection does not take a threshold");
  }
  if (threshold && !(*threshold >= 1.0 && *threshold <= 5.0)) {
    throw ValidationError("score threshold must lie in [1, 5]");
  }
  if (source_field_required && strategy != Strategy::kStratifiedLongest) {
    throw ValidationError("source_field_required applies to stratified_longest only");
  }
}

nlohmann::ordered_json SelectionSpec::to_json() const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy_name(strategy);
  if (k) j["k"] = *k;
  if (seed) j["seed"] = *seed;
  if (threshold) j["threshold"] = *threshold;
  if (strategy == Strategy::kStratifiedLongest) {
    j["source_field_required"] = source_field_required;
  }
  j["tiebreak"] = kTieBreak;
  return j;
}

SelectionSpec SelectionSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("strategy")) {
    throw SchemaError("selection spec needs a 'strategy'");
  }
  SelectionSpec s;
  s.strategy = parse_strategy(j["strategy"].get<std::string>());
  if (j.contains("k")) s.k = j["k"].get<std::size_t>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threshold")) s.threshold = j["threshold"].get<double>();
  s.source_field_required = j.value("source_field_required", false);
  return s;
}

nlohmann::ordered_json SelectionResult::to_json() const {
  nlohmann::ordered_json j;
  j["spec"] = spec.to_json();
  j["selected_ids"] = selected_ids;
  j["corpus_manifest_hash"] = corpus_manifest_hash;
  return j;
}

SelectionResult SelectionResult::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("spec") || !j.contains("selected_ids") ||
      !j.contains("corpus_manifest_hash")) {
    throw SchemaError(
        "selection needs 'spec', 'selected_ids' and 'corpus_manifest_hash'");
  }
  SelectionResult r;
  r.spec = SelectionSpec::from_json(j["spec"]);
  r.selected_ids = j["selected_ids"].get<std::vector<std::string>>();
  r.corpus_manifest_hash = j["corpus_manifest_hash"].get<std::string>();
  return r;
}

std::string corpus_fingerprint(const Records& records) {
  // Every field is length-prefixed, absent optionals get their own tag, so
  // distinct corpora never feed the same byte stream.
  Sha256 h;
  auto field = [&](std::string_view tag, std::string_view value) {
    h.update(tag);
    h.update(std::to_string(value.size()));
    h.update(":");
    h.update(value);
  };
  char buf[32];
  for (const auto& r : records) {
    field("i", r.id);
    field("n", r.instruction);
    field("p", r.input);
    field("o", r.output);
    if (r.source) field("s", *r.source);
    if (r.score) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.score);
      field("g", buf);
    }
    if (r.response_tokens) field("r", std::to_string(*r.response_tokens));
    if (r.instruction_tokens) field("t", std::to_string(*r.instruction_tokens));
    h.update(";");
  }
  return h.hex_digest();
}

SelectionResult select_longest(const Records& records, std::size_t k) {
  require_annotated(records);
  SelectionSpec spec = spec_for(Strategy::kLongest, k);
  return make_result(spec, top_k(pointers(records), k, longer), records);
}

SelectionResult select_shortest(const Records& records, std::size_t k) {
  require_annotated(records);
  SelectionSpec spec = spec_for(Strategy::kShortest, k);
  return make_result(spec, top_k(pointers(records), k, shorter), records);
}

SelectionResult select_random(const Records& records, std::size_t k,
                              std::uint64_t seed) {
  // Draw over id order so the sample does not depend on file order.
  auto pool = pointers(records);
  std::sort(pool.begin(), pool.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  SplitMix64 rng(seed);
  const std::size_t n = pool.size();
  const std::size_t draws = std::min(k, n);
  std::vector<std::string> ids;
  ids.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
    ids.push_back(pool[i]->id);
  }
  SelectionSpec spec = spec_for(Strategy::kRandom, k);
  spec.seed = seed;
  return make_result(spec, std::move(ids), records);
}

SelectionResult filter_by_score(const Records& records, double threshold) {
  if (!(threshold >= 1.0 && threshold <= 5.0)) {
    throw ValidationError("score threshold must lie in [1, 5]");
  }
  std::vector<const InstructionRecord*> passing;
  for (const auto& r : records) {
    if (!r.score) {
      throw PreconditionError("record " + r.id + " has no score; run grade first");
    }
    if (*r.score >= threshold) passing.push_back(&r);
  }
  std::sort(passing.begin(), passing.end(), [](const auto* a, const auto* b) {
    if (*a->score != *b->score) return *a->score > *b->score;
    return a->id < b->id;
  });
  std::vector<std::string> ids;
  ids.reserve(passing.size());
  for (const auto* r : passing) ids.push_back(r->id);
  SelectionSpec spec = spec_for(Strategy::kScoreThreshold, std::nullopt);
  spec.threshold = threshold;
  return make_result(spec, std::move(ids), records);
}

std::map<std::string, std::size_t> stratified_quotas(const Records& records,
                                                     std::size_t k) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& r : records) {
    if (!r.source) {
      throw PreconditionError("record " + r.id +
                              " has no source; stratified selection needs one");
    }
    ++sizes[*r.source];
  }
  const std::size_t total = records.size();
  k = std::min(k, total);
  std::map<std::string, std::size_t> quotas;
  if (total == 0) return quotas;

  struct Share {
    const std::string* source;
    std::size_t size;
    std::size_t remainder;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [source, n] : sizes) {
    // k * n / total, split into integer part and remainder over `total`.
    const auto scaled = static_cast<unsigned __int128>(k) * n;
    const auto floor_q = static_cast<std::size_t>(scaled / total);
    quotas[source] = floor_q;
    assigned += floor_q;
    shares.push_back({&source, n, static_cast<std::size_t>(scaled % total)});
  }
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    if (a.size != b.size) return a.size > b.size;
    return *a.source < *b.source;
  });
  for (std::size_t i = 0; assigned < k; ++i, ++assigned) {
    ++quotas[*shares[i].source];
  }
  return quotas;
}

SelectionResult stratified_longest(const Records& records, std::size_t k) {
  require_annotated(records);
  const auto quotas = stratified_quotas(records, k);
  std::map<std::string, std::vector<const InstructionRecord*>> by_source;
  for (const auto& r : records) by_source[*r.source].push_back(&r);

  std::vector<const InstructionRecord*> chosen;
  for (auto& [source, pool] : by_source) {
    const std::size_t q = quotas.at(source);
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(q),
                      pool.end(), longer);
    chosen.insert(chosen.end(), pool.begin(),
                  pool.begin() + static_cast<std::ptrdiff_t>(q));
  }
  std::sort(chosen.begin(), chosen.end(), longer);
  std::vector<std::string> ids;
  ids.reserve(chosen.size());
  for (const auto* r : chosen) ids.push_back(r->id);
  SelectionSpec spec = spec_for(Strategy::kStratifiedLongest, k);
  spec.source_field_required = true;
  return make_result(spec, std::move(ids), records);
}

SelectionResult run_selection(const Records& records, const SelectionSpec& spec) {
  spec.check();
  switch (spec.strategy) {
    case Strategy::kLongest: return select_longest(records, *spec.k);
    case Strategy::kShortest: return select_shortest(records, *spec.k);
    case Strategy::kRandom: return select_random(records, *spec.k, *spec.seed);
    case Strategy::kScoreThreshold: return filter_by_score(records, *spec.threshold);
    case Strategy::kStratifiedLongest: return stratified_longest(records, *spec.k);
  }
  throw UsageError("unhandled strategy");
}

Records materialize(const Records& records, const SelectionResult& selection) {
  std::unordered_map<std::string_view, const InstructionRecord*> index;
  index.reserve(records.size());
  for (const auto& r : records) index.emplace(r.id, &r);
  Records out;
  out.reserve(selection.selected_ids.size());
  for (const auto& id : selection.selected_ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw PreconditionError("selected id " + id + " is not in the corpus");
    }
    out.push_back(*it->second);
  }
  return out;
}

nlohmann::ordered_json OverlapReport::to_json() const {
  auto hist = [](const std::map<double, std::size_t>& h) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& [lo, n] : h) a.push_back({{"score", lo}, {"count", n}});
    return a;
  };
  nlohmann::ordered_json j;
  j["size_a"] = size_a;
  j["size_b"] = size_b;
  j["shared"] = shared;
  j["jaccard"] = jaccard;
  j["scores_a"] = hist(scores_a);
  j["scores_b"] = hist(scores_b);
  j["unscored_a"] = unscored_a;
  j["unscored_b"] = unscored_b;
  return j;
}

OverlapReport selection_overlap(const SelectionResult& a,
                                const SelectionResult& b,
                                const Records& records) {
  if (a.corpus_manifest_hash != b.corpus_manifest_hash) {
    throw ValidationError("selections were drawn from different corpora");
  }
  if (corpus_fingerprint(records) != a.corpus_manifest_hash) {
    throw ValidationError("records do not match the selections' corpus");
  }
  const std::set<std::string> set_a(a.selected_ids.begin(), a.selected_ids.end());
  const std::set<std::string> set_b(b.selected_ids.begin(), b.selected_ids.end());
  OverlapReport report;
  report.size_a = set_a.size();
  report.size_b = set_b.size();
  for (const auto& id : set_a) report.shared += set_b.count(id);
  const std::size_t uni = report.size_a + report.size_b - report.shared;
  report.jaccard = uni == 0 ? 1.0 : static_cast<double>(report.shared) / uni;

  std::unordered_map<std::string_view, const InstructionRecord*> index;
  for (const auto& r : records) index.emplace(r.id, &r);
  auto fill = [&](const std::set<std::string>& ids,
                  std::map<double, std::size_t>& hist, std::size_t& unscored) {
    for (const auto& id : ids) {
      auto it = index.find(id);
      if (it == index.end()) {
        throw PreconditionError("selected id " + id + " is not in the corpus");
      }
      const auto* r = it->second;
      if (!r->score) {
        ++unscored;
        continue;
      }
      ++hist[std::floor(*r->score * 2.0) / 2.0];
    }
  };
  fill(set_a, report.scores_a, report.unscored_a);
  fill(set_b, report.scores_b, report.unscored_b);
  return report;
}

}  // namespace iftkit::select
