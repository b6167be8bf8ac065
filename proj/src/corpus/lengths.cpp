#include "iftkit/corpus/lengths.hpp"

#include <algorithm>

#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"

namespace iftkit::corpus {

nlohmann::json LengthManifest::to_json() const {
  nlohmann::json j;
  j["counter"] = counter.to_json();
  j["definition_sha256"] = definition_sha256 ? nlohmann::json(*definition_sha256)
                                             : nlohmann::json(nullptr);
  j["counter_hash"] = counter_hash;
  j["annotated_at"] = annotated_at;
  return j;
}

LengthManifest LengthManifest::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("counter")) {
    throw SchemaError("length manifest needs a 'counter' object");
  }
  LengthManifest m;
  m.counter = TokenCounterSpec::from_json(j["counter"]);
  if (j.contains("definition_sha256") && j["definition_sha256"].is_string()) {
    m.definition_sha256 = j["definition_sha256"].get<std::string>();
  }
  m.counter_hash = j.value("counter_hash", "");
  m.annotated_at = j.value("annotated_at", "");
  return m;
}

AnnotatedCorpus annotate_lengths(const Records& records,
                                 const TokenCounter& counter) {
  AnnotatedCorpus out;
  out.records = records;
  for (auto& r : out.records) {
    r.response_tokens = counter.count(r.output);
    r.instruction_tokens = counter.count(r.instruction);
  }
  out.manifest.counter = counter.spec();
  out.manifest.definition_sha256 = counter.definition_sha256();
  out.manifest.counter_hash = counter.counter_hash();
  out.manifest.annotated_at = rfc3339_now();
  return out;
}

nlohmann::json LengthStats::to_json() const {
  nlohmann::json j;
  j["count"] = count;
  j["mean"] = mean;
  j["median"] = median;
  j["min"] = min;
  j["max"] = max;
  j["histogram"] = nlohmann::json::array();
  for (const auto& b : histogram) {
    j["histogram"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  }
  return j;
}

LengthStats length_stats(const Records& records, std::size_t max_buckets) {
  std::vector<std::int64_t> values;
  values.reserve(records.size());
  for (const auto& r : records) {
    if (!r.response_tokens) {
      throw PreconditionError("record " + r.id + " has no response_tokens; run "
                              "annotate-lengths first");
    }
    values.push_back(*r.response_tokens);
  }
  LengthStats stats;
  stats.count = values.size();
  if (values.empty()) return stats;

  std::sort(values.begin(), values.end());
  stats.min = values.front();
  stats.max = values.back();
  long double sum = 0;
  for (auto v : values) sum += v;
  stats.mean = static_cast<double>(sum / values.size());
  const std::size_t mid = values.size() / 2;
  stats.median = values.size() % 2
                     ? static_cast<double>(values[mid])
                     : (static_cast<double>(values[mid - 1]) + values[mid]) / 2.0;

  const std::int64_t span = stats.max - stats.min + 1;
  const auto buckets = static_cast<std::int64_t>(
      std::min<std::size_t>(std::max<std::size_t>(max_buckets, 1), span));
  const std::int64_t width = (span + buckets - 1) / buckets;
  for (std::int64_t lo = stats.min; lo <= stats.max; lo += width) {
    stats.histogram.push_back({lo, std::min(lo + width - 1, stats.max), 0});
  }
  for (auto v : values) {
    stats.histogram[static_cast<std::size_t>((v - stats.min) / width)].count++;
  }
  return stats;
}

}  // namespace iftkit::corpus
