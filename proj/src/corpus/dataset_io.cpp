#include "iftkit/corpus/dataset_io.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"

namespace iftkit::corpus {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

[[noreturn]] void throw_json_error(std::string_view origin, std::string_view text,
                                   std::size_t byte, const char* what) {
  // nlohmann reports the 1-based position of the offending byte.
  const std::size_t offset = byte > 0 ? byte - 1 : 0;
  throw ParseError(std::string(origin) + ": malformed JSON at line " +
                   std::to_string(line_of(text, offset)) + ", byte " +
                   std::to_string(offset) + ": " + what);
}

std::string required_string(const json& obj, const char* field,
                            std::size_t index) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw SchemaError("record " + std::to_string(index) + ": missing field '" +
                      field + "'");
  }
  if (!it->is_string()) {
    throw SchemaError("record " + std::to_string(index) + ": field '" + field +
                      "' must be a string");
  }
  return it->get<std::string>();
}

void read_optional_fields(const json& obj, std::size_t index,
                          InstructionRecord& rec) {
  if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
    if (it->is_string()) {
      rec.id = it->get<std::string>();
    } else if (it->is_number_integer()) {
      rec.id = std::to_string(it->get<long long>());
    } else {
      throw SchemaError("record " + std::to_string(index) +
                        ": field 'id' must be a string or integer");
    }
  }
  if (auto it = obj.find("score"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) {
      throw SchemaError("record " + std::to_string(index) +
                        ": field 'score' must be a number");
    }
    const double s = it->get<double>();
    if (!(s >= 1.0 && s <= 5.0)) {
      throw SchemaError("record " + std::to_string(index) +
                        ": field 'score' outside [1, 5]");
    }
    rec.score = s;
  }
  if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw SchemaError("record " + std::to_string(index) +
                        ": field 'source' must be a string");
    }
    rec.source = it->get<std::string>();
  }
  for (auto [field, slot] :
       {std::pair{"response_tokens", &rec.response_tokens},
        std::pair{"instruction_tokens", &rec.instruction_tokens}}) {
    if (auto it = obj.find(field); it != obj.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<long long>() < 0) {
        throw SchemaError("record " + std::to_string(index) + ": field '" +
                          field + "' must be a nonnegative integer");
      }
      *slot = it->get<std::int64_t>();
    }
  }
}

InstructionRecord record_from_object(const json& obj, std::size_t index,
                                     DatasetFormat format) {
  if (!obj.is_object()) {
    throw SchemaError("record " + std::to_string(index) + ": not a JSON object");
  }
  InstructionRecord rec;
  rec.id = positional_id(index);
  if (format == DatasetFormat::kLimaConversations) {
    auto it = obj.find("conversations");
    if (it == obj.end() || !it->is_array()) {
      throw SchemaError("record " + std::to_string(index) +
                        ": missing field 'conversations'");
    }
    if (it->size() < 2 || !(*it)[0].is_string() || !(*it)[1].is_string()) {
      throw SchemaError("record " + std::to_string(index) +
                        ": field 'conversations' needs [user, assistant] strings");
    }
    rec.instruction = (*it)[0].get<std::string>();
    rec.output = (*it)[1].get<std::string>();
  } else {
    rec.instruction = required_string(obj, "instruction", index);
    rec.output = required_string(obj, "output", index);
    if (auto it = obj.find("input"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw SchemaError("record " + std::to_string(index) +
                          ": field 'input' must be a string");
      }
      rec.input = it->get<std::string>();
    }
  }
  read_optional_fields(obj, index, rec);
  if (format == DatasetFormat::kJsonlSourced && !rec.source) {
    throw SchemaError("record " + std::to_string(index) +
                      ": missing field 'source'");
  }
  return rec;
}

ordered_json record_to_object(const InstructionRecord& rec,
                              DatasetFormat format) {
  ordered_json obj;
  obj["id"] = rec.id;
  if (format == DatasetFormat::kLimaConversations) {
    obj["conversations"] = ordered_json::array({rec.instruction, rec.output});
  } else {
    obj["instruction"] = rec.instruction;
    obj["input"] = rec.input;
    obj["output"] = rec.output;
  }
  if (rec.source) obj["source"] = *rec.source;
  if (rec.score) obj["score"] = *rec.score;
  if (rec.response_tokens) obj["response_tokens"] = *rec.response_tokens;
  if (rec.instruction_tokens) obj["instruction_tokens"] = *rec.instruction_tokens;
  return obj;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

DatasetFormat parse_format(std::string_view name) {
  if (name == "alpaca_json") return DatasetFormat::kAlpacaJson;
  if (name == "lima_conversations") return DatasetFormat::kLimaConversations;
  if (name == "jsonl_sourced") return DatasetFormat::kJsonlSourced;
  if (name == "jsonl_generic") return DatasetFormat::kJsonlGeneric;
  throw UsageError("unknown dataset format '" + std::string(name) + "'");
}

std::string_view format_name(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kAlpacaJson: return "alpaca_json";
    case DatasetFormat::kLimaConversations: return "lima_conversations";
    case DatasetFormat::kJsonlSourced: return "jsonl_sourced";
    case DatasetFormat::kJsonlGeneric: return "jsonl_generic";
  }
  return "unknown";
}

Records parse_dataset(std::string_view text, DatasetFormat format,
                      std::string_view origin) {
  Records records;
  if (format == DatasetFormat::kAlpacaJson) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw_json_error(origin, text, e.byte, e.what());
    }
    if (!doc.is_array()) {
      throw SchemaError(std::string(origin) + ": alpaca_json must be a JSON array");
    }
    records.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
      records.push_back(record_from_object(doc[i], i, format));
    }
    return records;
  }

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!is_blank(line)) {
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        const std::size_t offset = pos + (e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(std::string(origin) + ": malformed JSON at line " +
                         std::to_string(line_no) + ", byte " +
                         std::to_string(offset) + ": " + e.what());
      }
      records.push_back(record_from_object(obj, records.size(), format));
    }
    pos = end + 1;
  }
  return records;
}

Records load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  return parse_dataset(read_file(path), format, path.string());
}

std::string serialize_dataset(const Records& records, DatasetFormat format) {
  if (format == DatasetFormat::kAlpacaJson) {
    ordered_json doc = ordered_json::array();
    for (const auto& r : records) doc.push_back(record_to_object(r, format));
    return doc.dump(2) + "\n";
  }
  std::string out;
  for (const auto& r : records) {
    out += record_to_object(r, format).dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const Records& records, const std::filesystem::path& path,
                   DatasetFormat format) {
  if (format == DatasetFormat::kJsonlSourced) {
    for (const auto& r : records) {
      if (!r.source) {
        throw ValidationError("record " + r.id +
                              " has no source; jsonl_sourced requires one");
      }
    }
  }
  if (format == DatasetFormat::kLimaConversations) {
    for (const auto& r : records) {
      if (!r.input.empty()) {
        throw ValidationError("record " + r.id +
                              " has an input; lima_conversations cannot hold one");
      }
    }
  }
  write_file_atomic(path, serialize_dataset(records, format));
}

std::string prompt_text(const InstructionRecord& record) {
  if (record.input.empty()) return record.instruction;
  return record.instruction + "\n\n" + record.input;
}

std::string positional_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

}  // namespace iftkit::corpus
