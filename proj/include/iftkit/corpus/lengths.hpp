#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/corpus/record.hpp"
#include "iftkit/corpus/tokenizer.hpp"

namespace iftkit::corpus {

// Records which counter produced a dataset's token annotations.
struct LengthManifest {
  TokenCounterSpec counter;
  std::optional<std::string> definition_sha256;
  std::string counter_hash;
  std::string annotated_at;  // RFC 3339

  nlohmann::json to_json() const;
  static LengthManifest from_json(const nlohmann::json& j);
};

struct AnnotatedCorpus {
  Records records;
  LengthManifest manifest;
};

// Fills response_tokens (output) and instruction_tokens (instruction) on a
// copy of `records`. Order is preserved.
AnnotatedCorpus annotate_lengths(const Records& records,
                                 const TokenCounter& counter);

struct HistogramBucket {
  std::int64_t lo;  // inclusive
  std::int64_t hi;  // inclusive
  std::size_t count;
};

struct LengthStats {
  std::size_t count = 0;
  double mean = 0;
  double median = 0;
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::vector<HistogramBucket> histogram;

  nlohmann::json to_json() const;
};

// Statistics over response_tokens. Throws PreconditionError naming the first
// record that is not annotated. The histogram uses at most `max_buckets`
// equal-width integer buckets that exactly partition [min, max].
LengthStats length_stats(const Records& records, std::size_t max_buckets = 10);

}  // namespace iftkit::corpus
