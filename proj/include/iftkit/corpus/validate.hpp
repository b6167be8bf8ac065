#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/corpus/record.hpp"

namespace iftkit::corpus {

struct ValidationReport {
  std::vector<std::string> empty_outputs;    // ids with empty/blank output
  std::vector<std::string> duplicate_ids;    // every repeat beyond the first
  std::vector<std::string> duplicate_pairs;  // later copies of an (instruction, input)

  bool clean() const {
    return empty_outputs.empty() && duplicate_ids.empty() &&
           duplicate_pairs.empty();
  }

  nlohmann::ordered_json to_json() const;
};

ValidationReport validate(const Records& records);

// Drops every record validate() would flag. For duplicate ids and duplicate
// (instruction, input) pairs the first occurrence is kept.
Records exclude_flagged(const Records& records);

}  // namespace iftkit::corpus
