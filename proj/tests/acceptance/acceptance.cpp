// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "cli_runner.hpp"
#include "iftkit/analysis/bleu.hpp"
#include "iftkit/analysis/contamination.hpp"
#include "iftkit/analysis/length_control.hpp"
#include "iftkit/analysis/loss_curve.hpp"
#include "iftkit/analysis/train_config.hpp"
#include "iftkit/corpus/dataset_io.hpp"
#include "iftkit/humaneval/server.hpp"
#include "iftkit/humaneval/service.hpp"
#include "iftkit/judge/evaluation.hpp"
#include "iftkit/refine/introspection.hpp"
#include "iftkit/select/selection.hpp"
#include "reference_bleu.hpp"
#include "stub_oracle.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace iftkit;
using iftkit::testing::TempDir;
using json = nlohmann::json;

namespace {

// Thresholds.
constexpr double kSelectionBudgetSec = 5.0;
constexpr std::size_t kSelectionCorpora = 200;
constexpr std::size_t kSelectionMaxN = 10000;
constexpr std::size_t kAlpacaSize = 52002;
constexpr std::size_t kSelectK = 1000;
constexpr std::size_t kSwapTrials = 1000;
constexpr double kContaminationThreshold = 20.0;
constexpr double kScanBudgetSec = 30.0;
constexpr std::size_t kScanTrain = 1000;
constexpr std::size_t kScanEval = 300;
constexpr std::size_t kRefineRecords = 1000;
constexpr double kMalformedRate = 0.05;
constexpr std::size_t kLossCurves = 1000;
constexpr std::size_t kStudyN = 100;
constexpr std::size_t kSubmissions = 425;
constexpr double kBleuTolerance = 1e-9;
constexpr double kPctSumTolerance = 1e-9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates failed checks into a short explanation.
class Checker {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (failures_.size() < 5) failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome outcome() const {
    Outcome o;
    o.pass = pass_;
    const auto& parts = pass_ ? notes_ : failures_;
    for (std::size_t i = 0; i < parts.size(); ++i) o.detail += (i ? "; " : "") + parts[i];
    return o;
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

oracle::OracleConfig stub_config(const std::string& url, const fs::path& cache = {}) {
  oracle::OracleConfig c;
  c.endpoint_url = url;
  c.model_id = "stub";
  c.retry.base_backoff_ms = 1;
  c.cache_dir = cache;
  return c;
}

std::vector<std::string> oracle_prefix(corpus::Records rs, std::size_t k, bool longest) {
  std::sort(rs.begin(), rs.end(), [&](const auto& a, const auto& b) {
    if (*a.response_tokens != *b.response_tokens) {
      return longest ? *a.response_tokens > *b.response_tokens
                     : *a.response_tokens < *b.response_tokens;
    }
    return a.id < b.id;
  });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < std::min(k, rs.size()); ++i) ids.push_back(rs[i].id);
  return ids;
}

Outcome criterion1() {
  Checker c;
  std::mt19937_64 rng(20240601);
  const auto t0 = std::chrono::steady_clock::now();
  double select_secs = 0;
  std::size_t mismatches = 0;
  for (std::size_t trial = 0; trial < kSelectionCorpora; ++trial) {
    const std::size_t n = 1 + rng() % kSelectionMaxN;
    const std::int64_t hi = trial % 3 == 0 ? 5 : trial % 3 == 1 ? 200 : 5000;
    auto rs = iftkit::testing::random_annotated(rng, n, 0, hi);
    std::shuffle(rs.begin(), rs.end(), rng);
    const std::size_t k = rng() % (n + 1);
    const auto s0 = std::chrono::steady_clock::now();
    const auto longest = select::select_longest(rs, k);
    const auto shortest = select::select_shortest(rs, k);
    select_secs += seconds_since(s0);
    if (longest.selected_ids != oracle_prefix(rs, k, true)) ++mismatches;
    if (shortest.selected_ids != oracle_prefix(rs, k, false)) ++mismatches;
  }
  const double total_secs = seconds_since(t0);
  c.check(mismatches == 0, std::to_string(mismatches) + " mismatching selections");
  // The budget covers the whole loop, fixture generation and oracle included.
  c.check(total_secs < kSelectionBudgetSec, "took " + fmt("%.2f", total_secs) + " s");
  c.note(std::to_string(kSelectionCorpora) + " corpora, 0 mismatches, selection " +
         fmt("%.2f", select_secs) + " s (" + fmt("%.2f", total_secs) + " s with fixture generation and oracle)");
  return c.outcome();
}

Outcome criterion2() {
  Checker c;
  TempDir dir("iftkit-acc2");
  std::mt19937_64 rng(52002);
  const char* sources[] = {"self-instruct", "sharegpt", "dolly", "oasst", "flan"};
  const double weights[] = {0.5, 0.2, 0.15, 0.1, 0.05};
  std::discrete_distribution<int> pick(std::begin(weights), std::end(weights));
  json arr = json::array();
  for (std::size_t i = 0; i < kAlpacaSize; ++i) {
    arr.push_back({{"instruction", "Instruction " + std::to_string(i)},
                   {"input", i % 3 ? "" : "context"},
                   {"output", iftkit::testing::random_sentence(rng, 1 + static_cast<int>(rng() % 120), 500)},
                   {"source", sources[pick(rng)]}});
  }
  iftkit::testing::write_text(dir / "alpaca_data.json", arr.dump());
  const auto out = dir.path().string();
  auto r = iftkit::testing::run_cli({"ingest", "--input", (dir / "alpaca_data.json").string(), "--format",
                                     "alpaca_json", "--name", "alpaca", "--out", out});
  c.check(r.code == 0, "ingest failed: " + r.err);
  r = iftkit::testing::run_cli({"annotate-lengths", "--input", (dir / "alpaca.jsonl").string(), "--out", out});
  c.check(r.code == 0, "annotate failed: " + r.err);
  r = iftkit::testing::run_cli({"select", "--input", (dir / "annotated.jsonl").string(), "--strategy",
                                "longest", "--k", std::to_string(kSelectK), "--out", out});
  c.check(r.code == 0, "select failed: " + r.err);
  if (r.code != 0) return c.outcome();
  const auto all = corpus::load_dataset(dir / "annotated.jsonl", corpus::DatasetFormat::kJsonlGeneric);
  const auto selected = corpus::load_dataset(dir / "selected.jsonl", corpus::DatasetFormat::kJsonlGeneric);
  c.check(all.size() == kAlpacaSize, "ingested " + std::to_string(all.size()) + " records");
  c.check(selected.size() == kSelectK, "selected " + std::to_string(selected.size()) + " records");
  c.check(std::vector<std::string>([&] {
            std::vector<std::string> ids;
            for (const auto& s : selected) ids.push_back(s.id);
            return ids;
          }()) == oracle_prefix(all, kSelectK, true),
          "selected ids differ from the sort-prefix oracle");

  std::map<std::string, std::size_t> counts;
  for (const auto& rec : all) ++counts[*rec.source];
  const auto quotas = select::stratified_quotas(all, kSelectK);
  std::size_t sum = 0;
  double worst = 0;
  for (const auto& [src, q] : quotas) {
    sum += q;
    const double exact = double(kSelectK) * double(counts[src]) / double(all.size());
    worst = std::max(worst, std::abs(double(q) - exact));
  }
  c.check(sum == kSelectK, "quotas sum to " + std::to_string(sum));
  c.check(worst < 1.0, "per-source deviation " + fmt("%.3f", worst));
  const auto strat = select::stratified_longest(all, kSelectK);
  c.check(strat.selected_ids.size() == kSelectK, "stratified selected " + std::to_string(strat.selected_ids.size()));
  c.note("52002 ingested, 1000 selected via CLI, quota deviation " + fmt("%.3f", worst));
  return c.outcome();
}

judge::Judgment judgment(judge::Order order, double first, double second) {
  judge::Judgment j;
  j.instruction_id = "q";
  j.order = order;
  j.score_first = first;
  j.score_second = second;
  return j;
}

judge::Verdict mirror(judge::Verdict v) {
  return v == judge::Verdict::kWin ? judge::Verdict::kLose
         : v == judge::Verdict::kLose ? judge::Verdict::kWin
                                      : judge::Verdict::kTie;
}

struct EvalFixture {
  std::vector<judge::EvalSet> sets;
  judge::ResponseSet a, b;
};

// Longest-k responses of a random corpus against copies truncated to half their words.
EvalFixture truncated_fixture(std::mt19937_64& rng, std::size_t k) {
  corpus::Records rs;
  for (std::size_t i = 0; i < 4 * k; ++i) {
    corpus::InstructionRecord r;
    r.id = corpus::positional_id(i);
    r.instruction = "Question " + std::to_string(i);
    r.output = iftkit::testing::random_sentence(rng, 2 + static_cast<int>(rng() % 60));
    r.response_tokens = static_cast<std::int64_t>(corpus::unicode_words(r.output).size());
    rs.push_back(r);
  }
  const auto chosen = select::materialize(rs, select::select_longest(rs, k));
  EvalFixture f;
  f.a.generator = "longest";
  f.b.generator = "truncated";
  f.sets = {{"Vicuna", {}}, {"Koala", {}}};
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto& r = chosen[i];
    f.sets[i % 2].instructions.push_back({r.id, r.instruction});
    f.a.outputs[r.id] = r.output;
    const auto words = corpus::unicode_words(r.output);
    std::string cut;
    for (std::size_t w = 0; w < words.size() / 2; ++w) cut += (w ? " " : "") + std::string(words[w]);
    f.b.outputs[r.id] = cut;
  }
  return f;
}

Outcome criterion3() {
  Checker c;
  std::size_t grid = 0, wrong = 0;
  for (int a1 = 1; a1 <= 10; ++a1)
    for (int b1 = 1; b1 <= 10; ++b1)
      for (int b2 = 1; b2 <= 10; ++b2)
        for (int a2 = 1; a2 <= 10; ++a2) {
          const int ta = a1 + a2, tb = b1 + b2;
          const auto want = ta > tb ? judge::Verdict::kWin : ta < tb ? judge::Verdict::kLose : judge::Verdict::kTie;
          wrong += judge::aggregate_outcome(judgment(judge::Order::kAFirst, a1, b1),
                                            judgment(judge::Order::kBFirst, b2, a2))
                       .verdict != want;
          ++grid;
        }
  c.check(grid == 10000 && wrong == 0, std::to_string(wrong) + " of " + std::to_string(grid) + " grid verdicts wrong");

  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> score(1, 10);
  std::size_t asym = 0;
  for (std::size_t t = 0; t < kSwapTrials; ++t) {
    const double a1 = score(rng), b1 = score(rng), b2 = score(rng), a2 = score(rng);
    const auto v = judge::aggregate_outcome(judgment(judge::Order::kAFirst, a1, b1),
                                            judgment(judge::Order::kBFirst, b2, a2)).verdict;
    // Swapped roles: the former B is now shown first in the A-first order.
    const auto s = judge::aggregate_outcome(judgment(judge::Order::kAFirst, b2, a2),
                                            judgment(judge::Order::kBFirst, a1, b1)).verdict;
    asym += s != mirror(v);
  }
  c.check(asym == 0, std::to_string(asym) + " swap asymmetries");

  stub::StubOracle stub([](const json& r, std::size_t) { return stub::positional_judge(r); });
  stub.start();
  auto f = truncated_fixture(rng, 60);
  oracle::OracleClient client(stub_config(stub.url()));
  const auto res = judge::evaluate_models(f.sets, f.a, f.b, client, corpus::TokenCounter());
  c.check(res.table.overall.n == 60 && res.table.overall.ties == 60,
          "position-biased judge gave " + std::to_string(res.table.overall.ties) + "/" +
              std::to_string(res.table.overall.n) + " ties");
  c.note("10000 grid cases exact, 1000 swaps symmetric, positional stub 100% ties");
  return c.outcome();
}

Outcome criterion4() {
  Checker c;
  std::mt19937_64 rng(4444);
  stub::StubOracle length_stub([](const json& r, std::size_t) { return stub::length_preferring_judge(r); });
  length_stub.start();
  auto f = truncated_fixture(rng, 100);
  oracle::OracleClient client(stub_config(length_stub.url()));
  const auto res = judge::evaluate_models(f.sets, f.a, f.b, client, corpus::TokenCounter());
  const auto& o = res.table.overall;
  c.check(o.n == 100, "evaluable pairs " + std::to_string(o.n));
  c.check(o.win_pct == 100.0 && o.tie_pct == 0.0 && o.lose_pct == 0.0,
          "got " + fmt("%.2f", o.win_pct) + "/" + fmt("%.2f", o.tie_pct) + "/" + fmt("%.2f", o.lose_pct));

  // Randomized judges: scores derived from the prompt hash and a per-run salt.
  std::size_t bad_sums = 0, runs = 0, rows = 0;
  for (std::uint64_t salt = 1; salt <= 20; ++salt) {
    stub::StubOracle random_stub([salt](const json& r, std::size_t) {
      std::mt19937_64 g(std::hash<std::string>{}(stub::user_content(r)) ^ (salt * 0x9E3779B97F4A7C15ULL));
      std::uniform_int_distribution<int> s(1, 10);
      return stub::StubReply{200, std::to_string(s(g)) + " " + std::to_string(s(g)), std::nullopt, 0};
    });
    random_stub.start();
    auto rf = truncated_fixture(rng, 10 + rng() % 40);
    oracle::OracleClient rc(stub_config(random_stub.url()));
    const auto rr = judge::evaluate_models(rf.sets, rf.a, rf.b, rc, corpus::TokenCounter());
    std::vector<judge::WinRateRow> all = rr.table.rows;
    all.push_back(rr.table.overall);
    for (const auto& row : all) {
      if (row.n == 0) continue;
      ++rows;
      bad_sums += std::abs(row.win_pct + row.tie_pct + row.lose_pct - 100.0) > kPctSumTolerance;
    }
    ++runs;
  }
  c.check(bad_sums == 0, std::to_string(bad_sums) + " rows whose percentages do not sum to 100");
  c.note("length judge 100/0/0 over 100 pairs; " + std::to_string(rows) + " rows over " +
         std::to_string(runs) + " random runs sum to 100");
  return c.outcome();
}

Outcome criterion5() {
  Checker c;
  std::mt19937_64 rng(555);
  bool identical = true;
  for (int i = 0; i < 200; ++i) {
    const auto s = iftkit::testing::random_sentence(rng, 1 + static_cast<int>(rng() % 50));
    identical &= analysis::bleu(s, s).value == 100.0;
  }
  c.check(identical, "bleu(x, x) != 100");
  bool disjoint = true;
  for (int i = 0; i < 200; ++i) {
    auto x = iftkit::testing::random_sentence(rng, 1 + static_cast<int>(rng() % 30), 50);
    auto y = iftkit::testing::random_sentence(rng, 1 + static_cast<int>(rng() % 30), 50);
    std::replace(y.begin(), y.end(), 'w', 'v');
    disjoint &= analysis::bleu(x, y).value == 0.0;
  }
  c.check(disjoint, "disjoint vocabularies scored above 0");

  const std::vector<std::pair<std::string, std::string>> fixed = {
      {"the cat sat on the mat", "the cat is on the mat"},
      {"the cat sat on the mat", "the cat sat on a mat"},
      {"It is a guide to action which ensures that the military always obeys the commands of the party.",
       "It is a guide to action that ensures that the military will forever heed Party commands."},
      {"It is to insure the troops forever hearing the activity guidebook that party direct.",
       "It is a guide to action that ensures that the military will forever heed Party commands."},
      {"Hello, world!", "Hello world!"},
      {"a b c d e f", "a b c d e f g h i j"},
      {"one one one one", "one one"},
      {"What is the capital of France?", "What is the capital city of France?"},
      {"2 + 2 = 4", "2 + 2 = 4 ."},
      {"The quick brown fox jumps over the lazy dog", "A quick brown fox jumped over a lazy dog"},
  };
  std::vector<std::pair<std::string, std::string>> cases = fixed;
  while (cases.size() < 30) {
    auto x = iftkit::testing::random_sentence(rng, 4 + static_cast<int>(rng() % 20), 10);
    auto y = iftkit::testing::random_sentence(rng, 4 + static_cast<int>(rng() % 20), 10);
    cases.emplace_back(x, cases.size() % 2 ? y : x + " " + y);
  }
  double worst = 0;
  for (const auto& [x, y] : cases) {
    worst = std::max(worst, std::abs(analysis::bleu(x, y).value - iftkit::testing::reference_bleu(x, y)));
  }
  c.check(worst <= kBleuTolerance, "reference BLEU deviation " + fmt("%.3g", worst));

  // 1000 x 300 fixture with one planted near-duplicate (one synonym swap in 30 words).
  std::vector<std::string> train, eval;
  for (std::size_t i = 0; i < kScanTrain; ++i) train.push_back(iftkit::testing::random_sentence(rng, 20 + static_cast<int>(rng() % 20), 5000));
  for (std::size_t i = 0; i < kScanEval; ++i) eval.push_back(iftkit::testing::random_sentence(rng, 20 + static_cast<int>(rng() % 20), 5000));
  const std::size_t planted_train = 417, planted_eval = 123;
  {
    std::vector<std::string> words;
    std::istringstream in(iftkit::testing::random_sentence(rng, 30, 5000));
    for (std::string w; in >> w;) words.push_back(w);
    std::string original, swapped;
    for (std::size_t i = 0; i < words.size(); ++i) {
      original += (i ? " " : "") + words[i];
      swapped += (i ? " " : "") + (i == 14 ? std::string("synonym") : words[i]);
    }
    train[planted_train] = original;
    eval[planted_eval] = swapped;
  }
  auto to_records = [](const std::vector<std::string>& texts, const std::string& prefix) {
    corpus::Records rs;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      corpus::InstructionRecord r;
      r.id = prefix + corpus::positional_id(i);
      r.instruction = texts[i];
      r.output = "-";
      rs.push_back(r);
    }
    return rs;
  };
  const auto tr = to_records(train, "train-");
  const auto ev = to_records(eval, "eval-");
  analysis::ScanOptions opts;
  opts.threshold = kContaminationThreshold;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fast = analysis::contamination_scan(tr, ev, opts);
  const double fast_secs = seconds_since(t0);
  opts.prefilter = false;
  const auto t1 = std::chrono::steady_clock::now();
  const auto slow = analysis::contamination_scan(tr, ev, opts);
  const double slow_secs = seconds_since(t1);
  bool same = fast.size() == slow.size();
  for (std::size_t i = 0; same && i < fast.size(); ++i) {
    same = fast[i].train_id == slow[i].train_id && fast[i].eval_id == slow[i].eval_id &&
           fast[i].bleu == slow[i].bleu;
  }
  c.check(same, "prefiltered and exhaustive scans differ");
  c.check(fast.size() == 1, std::to_string(fast.size()) + " hits above threshold");
  if (fast.size() == 1) {
    c.check(fast[0].train_id == tr[planted_train].id && fast[0].eval_id == ev[planted_eval].id,
            "hit is not the planted pair");
  }
  c.check(fast_secs < kScanBudgetSec, "prefiltered scan took " + fmt("%.2f", fast_secs) + " s");
  c.check(slow_secs < kScanBudgetSec, "exhaustive scan took " + fmt("%.2f", slow_secs) + " s");
  c.note("30 reference cases within " + fmt("%.1g", worst) + ", 1 hit (BLEU " +
         fmt("%.2f", fast.empty() ? 0.0 : fast[0].bleu) + "), scans " + fmt("%.2f", fast_secs) +
         " s / " + fmt("%.2f", slow_secs) + " s");
  return c.outcome();
}

Outcome criterion6() {
  Checker c;
  TempDir dir("iftkit-acc6");
  // Remembers whether the latest completion for each prompt was malformed.
  std::mutex mu;
  std::map<std::string, bool> last_malformed;
  stub::StubOracle stub([&](const json& r, std::size_t) {
    auto reply = stub::echo_refiner(r, kMalformedRate);
    const bool bad = reply.content.find(refine::kReviewDelimiter) == std::string::npos;
    std::lock_guard lock(mu);
    last_malformed[stub::user_content(r)] = bad;
    return reply;
  });
  stub.start();
  std::mt19937_64 rng(6006);
  corpus::Records rs;
  for (std::size_t i = 0; i < kRefineRecords; ++i) {
    corpus::InstructionRecord r;
    r.id = corpus::positional_id(i);
    r.instruction = "Describe item " + std::to_string(i);
    r.output = iftkit::testing::random_sentence(rng, 5 + static_cast<int>(rng() % 40));
    r.response_tokens = 1;
    rs.push_back(r);
  }
  const auto sel = select::select_longest(rs, kRefineRecords);
  oracle::OracleClient cold(stub_config(stub.url(), dir / "cache"));
  const auto first = refine::refine_dataset(sel, rs, cold);
  std::size_t malformed_after_retries = 0;
  for (const auto& [prompt, bad] : last_malformed) malformed_after_retries += bad;
  c.check(first.records.size() == kRefineRecords, "returned " + std::to_string(first.records.size()) + " records");
  c.check(first.unrefined_count() == malformed_after_retries,
          "pass-through " + std::to_string(first.unrefined_count()) + " vs malformed " +
              std::to_string(malformed_after_retries));
  c.check(malformed_after_retries > 0, "stub produced no persistent malformed completions");

  const auto calls_before = stub.calls();
  oracle::OracleClient warm(stub_config(stub.url(), dir / "cache"));
  const auto second = refine::refine_dataset(sel, rs, warm);
  c.check(warm.network_calls() == 0 && stub.calls() == calls_before,
          "warm rerun made " + std::to_string(warm.network_calls()) + " network calls");
  c.check(second.records == first.records, "warm rerun produced different records");
  c.note("1000 returned, " + std::to_string(malformed_after_retries) + " passed through, " +
         std::to_string(calls_before) + " cold calls, 0 warm calls");
  return c.outcome();
}

Outcome criterion7() {
  Checker c;
  std::ifstream in(iftkit::testing::fixture("table3.csv"));
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0, mismatched = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    ++rows;
    try {
      const auto cfg = analysis::emit_train_config(analysis::parse_base_model(f.at(0)), f.at(1));
      const bool ok = analysis::base_model_name(cfg.base_model) == f[0] && cfg.dataset_name == f[1] &&
                      cfg.data_size == f[2] && cfg.num_gpus == std::stoi(f[3]) &&
                      cfg.epochs == std::stoi(f[4]) && cfg.lr == std::stod(f[5]) &&
                      (cfg.scheduler == analysis::LrScheduler::kCosine) == (f[6] == "cosine") &&
                      cfg.batch_size == std::stoi(f[7]) && cfg.context_window == std::stoi(f[8]) &&
                      cfg.weight_decay == std::stod(f[9]) && cfg.warmup_rate == std::stod(f[10]);
      mismatched += !ok;
    } catch (const std::exception&) {
      ++mismatched;
    }
  }
  c.check(rows == 17 && mismatched == 0,
          std::to_string(mismatched) + " of " + std::to_string(rows) + " rows differ");
  c.check(analysis::train_config_table().size() == rows, "table size differs from fixture");
  c.check(analysis::emit_generation_config(2048).dump() == R"({"max_new_tokens":2048})", "2048 variant");
  c.check(analysis::emit_generation_config(4096).dump() == R"({"max_new_tokens":4096})", "4096 variant");
  c.check(analysis::emit_generation_config(2048, 150).dump() ==
              R"({"max_new_tokens":2048,"min_new_tokens":150})",
          "min-150 variant");
  c.note("17 rows bit-exact; 2048, 4096 and min-150 generation configs");
  return c.outcome();
}

Outcome criterion8() {
  Checker c;
  std::mt19937_64 rng(8888);
  std::lognormal_distribution<double> loss(0.0, 1.5);
  std::size_t bad_start = 0, not_idempotent = 0;
  for (std::size_t t = 0; t < kLossCurves; ++t) {
    analysis::LossCurve curve;
    const std::size_t n = 1 + rng() % 300;
    for (std::size_t i = 0; i < n; ++i) curve.points.push_back({double(i), loss(rng)});
    const auto once = analysis::normalize_loss_curve(curve);
    const auto twice = analysis::normalize_loss_curve(once);
    bad_start += once.points.front().loss != 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (twice.points[i].loss != once.points[i].loss || twice.points[i].step != once.points[i].step) {
        ++not_idempotent;
        break;
      }
    }
  }
  c.check(bad_start == 0, std::to_string(bad_start) + " curves do not start at 1.0");
  c.check(not_idempotent == 0, std::to_string(not_idempotent) + " curves change on a second pass");
  c.note("1000 curves start at exactly 1.0 and are fixed points of a second pass");
  return c.outcome();
}

std::map<std::string, std::string> read_bundle(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const char* name : {"report.md", "report.json"}) {
    files[name] = iftkit::testing::slurp(dir / name);
  }
  for (const auto& e : fs::directory_iterator(dir / "tables")) {
    files["tables/" + e.path().filename().string()] = iftkit::testing::slurp(e.path());
  }
  return files;
}

// Writes judge inputs: the selected instructions as evaluation sets, with the
// refined outputs as model A and the originals as model B.
void write_judge_inputs(const fs::path& dir) {
  const auto original = corpus::load_dataset(dir / "selected.jsonl", corpus::DatasetFormat::kJsonlGeneric);
  const auto refined = corpus::load_dataset(dir / "refined.jsonl", corpus::DatasetFormat::kJsonlGeneric);
  std::vector<judge::EvalSet> sets = {{"Vicuna", {}}, {"Koala", {}}};
  judge::ResponseSet a{"refined", {}}, b{"original", {}};
  for (std::size_t i = 0; i < original.size(); ++i) {
    sets[i % 2].instructions.push_back({original[i].id, corpus::prompt_text(original[i])});
    b.outputs[original[i].id] = original[i].output;
  }
  for (const auto& r : refined) a.outputs[r.id] = r.output;
  iftkit::testing::write_text(dir / "sets.json", judge::eval_sets_to_json(sets).dump(2));
  iftkit::testing::write_text(dir / "a.jsonl", judge::responses_to_jsonl(a));
  iftkit::testing::write_text(dir / "b.jsonl", judge::responses_to_jsonl(b));
}

bool run_pipeline(const fs::path& dir, const std::string& url, const fs::path& input, std::string& error) {
  const auto out = dir.string();
  const std::vector<std::string> oracle_flags = {"--endpoint", url, "--model", "stub-judge",
                                                 "--cache-dir", (dir / "cache").string()};
  auto step = [&](std::vector<std::string> args, bool oracle) {
    if (oracle) args.insert(args.end(), oracle_flags.begin(), oracle_flags.end());
    args.insert(args.end(), {"--out", out});
    auto r = iftkit::testing::run_cli(args);
    if (r.code != 0) error = args[0] + ": " + r.err;
    return r.code == 0;
  };
  if (!step({"ingest", "--input", input.string(), "--format", "alpaca_json", "--name", "corpus"}, false)) return false;
  if (!step({"annotate-lengths", "--input", (dir / "corpus.jsonl").string()}, false)) return false;
  if (!step({"select", "--input", (dir / "annotated.jsonl").string(), "--strategy", "longest", "--k", "40"}, false)) return false;
  if (!step({"refine", "--input", (dir / "annotated.jsonl").string(), "--selection",
             (dir / "selected.selection.json").string()}, true)) return false;
  write_judge_inputs(dir);
  if (!step({"judge", "--a", (dir / "a.jsonl").string(), "--b", (dir / "b.jsonl").string(), "--sets",
             (dir / "sets.json").string()}, true)) return false;
  return step({"report", "--selection", "longest=" + (dir / "selected.selection.json").string(),
               "--win-rates", (dir / "win_rates.json").string(), "--lengths",
               "corpus=" + (dir / "annotated.jsonl").string()}, false);
}

Outcome criterion9() {
  Checker c;
  TempDir root("iftkit-acc9");
  std::mt19937_64 rng(999);
  json arr = json::array();
  for (int i = 0; i < 200; ++i) {
    arr.push_back({{"instruction", "Task " + std::to_string(i)},
                   {"input", ""},
                   {"output", iftkit::testing::random_sentence(rng, 1 + static_cast<int>(rng() % 80))}});
  }
  iftkit::testing::write_text(root / "input.json", arr.dump());
  stub::StubOracle stub(stub::pipeline_handler(0.1));
  stub.start();
  std::string error;
  const bool ok1 = run_pipeline(root / "run1", stub.url(), root / "input.json", error);
  c.check(ok1, "first run failed: " + error);
  const bool ok2 = ok1 && run_pipeline(root / "run2", stub.url(), root / "input.json", error);
  c.check(ok2, "second run failed: " + error);
  if (!ok2) return c.outcome();
  const auto b1 = read_bundle(root / "run1");
  const auto b2 = read_bundle(root / "run2");
  c.check(b1.size() >= 8, "bundle has only " + std::to_string(b1.size()) + " files");
  c.check(b1 == b2, "report bundles differ");
  c.note(std::to_string(b1.size()) + " bundle files byte-identical across runs (" +
         std::to_string(stub.calls()) + " stub calls)");
  return c.outcome();
}

Outcome criterion10() {
  Checker c;
  std::mt19937_64 rng(10);
  const std::vector<std::pair<std::string, std::size_t>> sizes = {
      {"LIMA", 300}, {"Vicuna", 80}, {"Koala", 180}, {"WizardLM", 218}, {"Self-Instruct", 252}};
  json sets = json::object();
  json ra = json::array(), rb = json::array();
  std::map<std::string, std::string> text_a;
  for (const auto& [name, n] : sizes) {
    sets[name] = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = name + "-" + std::to_string(i);
      sets[name].push_back({{"instruction_id", id}, {"instruction", "Prompt " + id}});
      text_a[id] = "A: " + iftkit::testing::random_sentence(rng, 12);
      ra.push_back({{"instruction_id", id}, {"output", text_a[id]}, {"generator", "model-alpha"}});
      rb.push_back({{"instruction_id", id}, {"output", "B: " + iftkit::testing::random_sentence(rng, 12)},
                    {"generator", "model-beta"}});
    }
  }
  humaneval::HumanEvalService service;
  humaneval::HumanEvalServer server(service);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client http("127.0.0.1", port);
  const json create = {{"sets", sets}, {"responses_a", ra}, {"responses_b", rb},
                       {"n", kStudyN}, {"seed", 20240425}};
  std::vector<std::string> ids;
  for (int i = 0; i < 2; ++i) {
    auto res = http.Post("/api/studies", create.dump(), "application/json");
    if (!res || res->status != 201) {
      c.check(false, "study creation failed");
      return c.outcome();
    }
    ids.push_back(json::parse(res->body)["study_id"]);
  }

  // Walks every task of a study for one annotator, returning the task views in order.
  auto walk = [&](const std::string& id, const std::string& annotator, std::size_t limit,
                  const std::function<std::string(const json&)>& choose) {
    std::vector<json> seen;
    while (seen.size() < limit) {
      auto res = http.Get("/api/studies/" + id + "/next?annotator=" + annotator);
      if (!res || res->status != 200) break;
      const auto body = json::parse(res->body);
      if (body["done"].get<bool>()) break;
      const auto& task = body["task"];
      seen.push_back(task);
      const std::string choice = choose(task);
      json result = {{"task_id", task["task_id"]}, {"choice", choice}, {"annotator_id", annotator}};
      auto posted = http.Post("/api/studies/" + id + "/results", result.dump(), "application/json");
      if (!posted || posted->status != 201) break;
    }
    return seen;
  };

  // Brute-force recount from the visible texts.
  std::size_t wins_a = 0, wins_b = 0, submitted = 0;
  auto choose = [&](const json& task) {
    const std::string choice = rng() % 3 ? "left" : "right";
    const std::string picked = task[choice == "left" ? "left_text" : "right_text"];
    picked.rfind("A: ", 0) == 0 ? ++wins_a : ++wins_b;
    ++submitted;
    return choice;
  };
  std::vector<std::vector<json>> views;
  for (int ann = 0; submitted < kSubmissions; ++ann) {
    views.push_back(walk(ids[0], "annotator-" + std::to_string(ann), kSubmissions - submitted, choose));
    if (views.back().empty()) break;
  }
  const auto replica = walk(ids[1], "annotator-0", kStudyN, [](const json&) { return std::string("left"); });
  c.check(!views.empty() && views[0].size() == kStudyN, "first annotator saw " + std::to_string(views[0].size()) + " tasks");
  c.check(!views.empty() && replica == views[0], "same seed produced a different study");
  c.check(submitted == kSubmissions, "submitted " + std::to_string(submitted));

  auto res = http.Get("/api/studies/" + ids[0] + "/summary");
  const auto summary = json::parse(res ? res->body : "{}");
  const double expected_pct = wins_a * 100.0 / double(kSubmissions);
  c.check(summary.value("n", 0) == static_cast<int>(kSubmissions), "summary n differs");
  c.check(summary.value("wins_model_a", 0) == static_cast<int>(wins_a) &&
              summary.value("wins_model_b", 0) == static_cast<int>(wins_b),
          "summary wins differ from recount");
  c.check(summary.value("win_pct_model_a", -1.0) == expected_pct, "win rate differs from recount");
  const bool leaks = res && (res->body.find("model-alpha") != std::string::npos ||
                             res->body.find("model-beta") != std::string::npos);
  c.check(!leaks, "summary exposes model names");
  server.stop();
  c.note("425 HTTP submissions; win rate " + fmt("%.4f", expected_pct) + "% matches recount; seed replay identical");
  return c.outcome();
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  int failed = 0;
  for (const auto& [n, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("CRITERION %d: %s - %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
