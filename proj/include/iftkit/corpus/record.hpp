#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace iftkit::corpus {

// One (instruction, input, output) example. Text is UTF-8 and stored exactly
// as read; nothing is normalized.
struct InstructionRecord {
  std::string id;
  std::string instruction;
  std::string input;
  std::string output;
  std::optional<std::string> source;
  std::optional<double> score;  // grade in [1, 5]
  std::optional<std::int64_t> response_tokens;
  std::optional<std::int64_t> instruction_tokens;

  bool operator==(const InstructionRecord&) const = default;
};

using Records = std::vector<InstructionRecord>;

// Prompt text shown to a model: the instruction, followed by the input when
// one is present.
std::string prompt_text(const InstructionRecord& record);

// Zero-padded positional id ("000042") so that lexicographic and numeric
// order agree.
std::string positional_id(std::size_t index);

}  // namespace iftkit::corpus
