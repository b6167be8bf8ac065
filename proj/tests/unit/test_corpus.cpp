#include <gtest/gtest.h>

#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "iftkit/common/error.hpp"
#include "iftkit/corpus/dataset_io.hpp"
#include "iftkit/corpus/lengths.hpp"
#include "iftkit/corpus/tokenizer.hpp"
#include "iftkit/corpus/validate.hpp"
#include "test_util.hpp"

using namespace iftkit;
using namespace iftkit::corpus;
using nlohmann::json;

namespace {

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto w : unicode_words(text)) out.emplace_back(w);
  return out;
}

// Oracle: apply merges one rule at a time in rank order, each over the whole
// symbol sequence left to right.
std::vector<std::string> sequential_bpe(const std::vector<std::pair<std::string, std::string>>& merges,
                                        std::string_view word) {
  std::vector<std::string> sym;
  for (auto cp : code_points(word)) sym.emplace_back(cp);
  for (const auto& [l, r] : merges) {
    std::vector<std::string> next;
    for (std::size_t i = 0; i < sym.size();) {
      if (i + 1 < sym.size() && sym[i] == l && sym[i + 1] == r) {
        next.push_back(l + r);
        i += 2;
      } else {
        next.push_back(sym[i]);
        i += 1;
      }
    }
    sym = std::move(next);
  }
  return sym;
}

}  // namespace

TEST(UnicodeWords, SplitsWordsAndPunctuation) {
  EXPECT_EQ(words("Hello, world! 123abc"),
            (std::vector<std::string>{"Hello", ",", "world", "!", "123abc"}));
  EXPECT_EQ(words("  \t\n"), std::vector<std::string>{});
  EXPECT_EQ(words("don't"), (std::vector<std::string>{"don", "'", "t"}));
}

TEST(UnicodeWords, NonAsciiLetters) {
  EXPECT_EQ(words("café über…naïve"), (std::vector<std::string>{"café", "über", "…", "naïve"}));
  EXPECT_EQ(words("日本語"), (std::vector<std::string>{"日本語"}));
}

TEST(UnicodeWords, TokensNeverContainWhitespace) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "ab ,.\t\n!9é";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    for (int i = 0; i < 40; ++i) s += alphabet[rng() % alphabet.size()];
    for (auto t : unicode_words(s)) {
      ASSERT_FALSE(t.empty());
      for (char c : t) ASSERT_FALSE(c == ' ' || c == '\t' || c == '\n');
    }
  }
}

TEST(CodePoints, SplitsUtf8) {
  auto cps = code_points("aé日");
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], "é");
}

TEST(Bpe, HandExample) {
  auto model = BpeModel::from_json(json{{"merges", {"l o", "lo w", "e r"}}});
  EXPECT_EQ(model.segment_word("lower"), (std::vector<std::string>{"low", "er"}));
  EXPECT_EQ(model.count_word("lower"), 2u);
  EXPECT_EQ(model.count_word("xyz"), 3u);
}

TEST(Bpe, MatchesSequentialOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> symbols{"a", "b", "c", "d"};
    std::vector<std::pair<std::string, std::string>> merges;
    std::set<std::string> seen;
    json def = {{"merges", json::array()}};
    const int n_merges = static_cast<int>(rng() % 12) + 1;
    for (int i = 0; i < n_merges * 3 && static_cast<int>(merges.size()) < n_merges; ++i) {
      const auto& l = symbols[rng() % symbols.size()];
      const auto& r = symbols[rng() % symbols.size()];
      if (!seen.insert(l + " " + r).second) continue;
      merges.emplace_back(l, r);
      def["merges"].push_back(l + " " + r);
      symbols.push_back(l + r);
    }
    const auto model = BpeModel::from_json(def);
    for (int w = 0; w < 30; ++w) {
      std::string word;
      const int len = static_cast<int>(rng() % 12) + 1;
      for (int i = 0; i < len; ++i) word += static_cast<char>('a' + rng() % 4);
      const auto expected = sequential_bpe(merges, word);
      ASSERT_EQ(model.segment_word(word), expected) << def.dump() << " " << word;
      ASSERT_EQ(model.count_word(word), expected.size());
    }
  }
}

TEST(Bpe, RejectsBadDefinitions) {
  EXPECT_THROW(BpeModel::from_json(json{{"merges", {"ab c"}}}), ConfigError);
  EXPECT_THROW(BpeModel::from_json(json{{"merges", {"a b", "a b"}}}), ConfigError);
  EXPECT_THROW(BpeModel::from_json(json{{"merges", {"a  b"}}}), ConfigError);
  EXPECT_THROW(BpeModel::from_json(json{{"vocab", {"a", "b"}}, {"merges", {"a b"}}}), ConfigError);
  EXPECT_THROW(BpeModel::from_json(json::array()), ConfigError);
}

TEST(TokenCounter, Schemes) {
  EXPECT_EQ(TokenCounter({TokenScheme::kBytes, {}}).count("héllo"), 6);
  EXPECT_EQ(TokenCounter().count("Hello, world"), 3);
  EXPECT_THROW(TokenCounter({TokenScheme::kBpe, {}}), ConfigError);
  EXPECT_THROW(TokenCounter({TokenScheme::kBytes, std::filesystem::path("x.json")}), ConfigError);
  EXPECT_THROW(parse_scheme("words"), ConfigError);
}

TEST(TokenCounter, BpeFromFileAndHash) {
  iftkit::testing::TempDir dir;
  iftkit::testing::write_text(dir / "bpe.json", R"({"merges":["l o","lo w"]})");
  TokenCounter c({TokenScheme::kBpe, dir / "bpe.json"});
  EXPECT_EQ(c.count("low lower"), 1 + 3);
  ASSERT_TRUE(c.definition_sha256().has_value());
  EXPECT_NE(c.counter_hash(), TokenCounter().counter_hash());
  EXPECT_EQ(c.counter_hash(), TokenCounter({TokenScheme::kBpe, dir / "bpe.json"}).counter_hash());
}

TEST(DatasetIo, AlpacaRoundTrip) {
  const std::string text = R"([
    {"instruction": "Say hi", "input": "", "output": "Hi"},
    {"instruction": "Add", "input": "1 2", "output": "3"}
  ])";
  auto records = parse_dataset(text, DatasetFormat::kAlpacaJson, "mem");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].id, "000000");
  EXPECT_EQ(records[1].input, "1 2");
  EXPECT_EQ(prompt_text(records[1]), "Add\n\n1 2");
  EXPECT_EQ(prompt_text(records[0]), "Say hi");
  for (auto f : {DatasetFormat::kAlpacaJson, DatasetFormat::kJsonlGeneric}) {
    EXPECT_EQ(parse_dataset(serialize_dataset(records, f), f, "rt"), records);
  }
}

TEST(DatasetIo, LimaConversations) {
  const std::string text =
      R"({"conversations": ["What is 2+2?", "4"], "source": "stackexchange"}
{"conversations": ["Name a color", "Blue"], "source": "wikihow"}
)";
  auto records = parse_dataset(text, DatasetFormat::kLimaConversations, "lima");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].instruction, "What is 2+2?");
  EXPECT_EQ(records[0].output, "4");
  EXPECT_EQ(records[1].source, "wikihow");
}

TEST(DatasetIo, JsonlSourcedNeedsSource) {
  EXPECT_THROW(parse_dataset(R"({"instruction":"a","output":"b"})" "\n", DatasetFormat::kJsonlSourced, "x"),
               SchemaError);
  auto r = parse_dataset(R"({"instruction":"a","output":"b","source":"s"})" "\n",
                         DatasetFormat::kJsonlSourced, "x");
  EXPECT_EQ(r.at(0).source, "s");
}

TEST(DatasetIo, ErrorsCarryLocation) {
  try {
    parse_dataset("{\"instruction\":\"a\",\"output\":\"b\"}\n{broken\n", DatasetFormat::kJsonlGeneric, "f.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  try {
    parse_dataset(R"([{"instruction":"a"}])", DatasetFormat::kAlpacaJson, "f.json");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("missing field 'output'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_dataset(R"([{"instruction":"a","output":"b","score":7}])", DatasetFormat::kAlpacaJson, "s"),
               SchemaError);
}

TEST(DatasetIo, OptionalFieldsSurvive) {
  InstructionRecord r;
  r.id = "x1";
  r.instruction = "i";
  r.output = "o";
  r.source = "src";
  r.score = 4.5;
  r.response_tokens = 12;
  r.instruction_tokens = 3;
  auto back = parse_dataset(serialize_dataset({r}, DatasetFormat::kJsonlGeneric),
                            DatasetFormat::kJsonlGeneric, "rt");
  EXPECT_EQ(back.at(0), r);
}

TEST(DatasetIo, WriteRejectsUnrepresentable) {
  iftkit::testing::TempDir dir;
  InstructionRecord r{"1", "i", "has input", "o", {}, {}, {}, {}};
  EXPECT_THROW(write_dataset({r}, dir / "x.jsonl", DatasetFormat::kLimaConversations), ValidationError);
  EXPECT_THROW(write_dataset({r}, dir / "y.jsonl", DatasetFormat::kJsonlSourced), ValidationError);
}

TEST(Validate, ReportsWithoutMutating) {
  Records rs = {
      {"a", "i1", "", "o", {}, {}, {}, {}},
      {"b", "i2", "", "  ", {}, {}, {}, {}},
      {"a", "i3", "", "o", {}, {}, {}, {}},
      {"c", "i1", "", "p", {}, {}, {}, {}},
  };
  const auto copy = rs;
  const auto report = validate(rs);
  EXPECT_EQ(rs, copy);
  EXPECT_EQ(report.empty_outputs, std::vector<std::string>{"b"});
  EXPECT_EQ(report.duplicate_ids, std::vector<std::string>{"a"});
  EXPECT_EQ(report.duplicate_pairs, std::vector<std::string>{"c"});
  EXPECT_FALSE(report.clean());
  const auto kept = exclude_flagged(rs);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].instruction, "i1");
  EXPECT_TRUE(validate(kept).clean());
}

TEST(Lengths, AnnotateAndStats) {
  Records rs = {
      {"a", "one two", "", "x", {}, {}, {}, {}},
      {"b", "one", "", "x y z", {}, {}, {}, {}},
      {"c", "one", "", "x y z w v", {}, {}, {}, {}},
  };
  const auto annotated = annotate_lengths(rs, TokenCounter());
  EXPECT_EQ(annotated.records[0].instruction_tokens, 2);
  EXPECT_EQ(annotated.records[2].response_tokens, 5);
  EXPECT_EQ(annotated.manifest.counter.scheme, TokenScheme::kUnicodeWords);
  const auto s = length_stats(annotated.records);
  EXPECT_EQ(s.count, 3u);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.max, 5);
  EXPECT_THROW(length_stats(rs), PreconditionError);
  EXPECT_EQ(length_stats({}).count, 0u);
}

TEST(Lengths, HistogramPartitionsRange) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::int64_t lo = static_cast<std::int64_t>(rng() % 50);
    const std::int64_t hi = lo + static_cast<std::int64_t>(rng() % 500);
    auto rs = iftkit::testing::random_annotated(rng, 1 + rng() % 200, lo, hi);
    const auto s = length_stats(rs);
    ASSERT_FALSE(s.histogram.empty());
    ASSERT_LE(s.histogram.size(), 10u);
    ASSERT_EQ(s.histogram.front().lo, s.min);
    ASSERT_EQ(s.histogram.back().hi, s.max);
    std::size_t total = 0;
    for (std::size_t i = 0; i < s.histogram.size(); ++i) {
      if (i) {
        ASSERT_EQ(s.histogram[i].lo, s.histogram[i - 1].hi + 1);
      }
      ASSERT_LE(s.histogram[i].lo, s.histogram[i].hi);
      total += s.histogram[i].count;
    }
    ASSERT_EQ(total, s.count);
  }
}

TEST(Lengths, ManifestRoundTrip) {
  LengthManifest m;
  m.counter.scheme = TokenScheme::kBytes;
  m.counter_hash = "abc";
  m.annotated_at = "2024-01-01T00:00:00Z";
  const auto back = LengthManifest::from_json(m.to_json());
  EXPECT_EQ(back.counter.scheme, TokenScheme::kBytes);
  EXPECT_EQ(back.counter_hash, "abc");
  EXPECT_EQ(back.annotated_at, m.annotated_at);
}
