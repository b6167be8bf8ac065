#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>

#include "iftkit/analysis/contamination.hpp"
#include "iftkit/analysis/epochs.hpp"
#include "iftkit/analysis/length_control.hpp"
#include "iftkit/analysis/loss_curve.hpp"
#include "iftkit/analysis/report.hpp"
#include "iftkit/analysis/train_config.hpp"
#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"
#include "iftkit/corpus/dataset_io.hpp"
#include "iftkit/corpus/lengths.hpp"
#include "iftkit/corpus/validate.hpp"
#include "iftkit/humaneval/server.hpp"
#include "iftkit/judge/evaluation.hpp"
#include "iftkit/judge/grading.hpp"
#include "iftkit/refine/introspection.hpp"
#include "iftkit/select/selection.hpp"

namespace iftkit::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct Context {
  std::string config_path;
  std::string out;
  bool dry_run = false;
  std::string log_level = "info";
  std::string endpoint;
  std::string model;
  std::string cache_dir;
  int max_in_flight = 0;
  std::string scheme;
  std::string bpe_path;
  json config = json::object();
};

void setup_logging(const std::string& level) {
  auto logger = std::make_shared<spdlog::logger>(
      "iftkit", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger->set_level(spdlog::level::from_str(level));
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
}

void load_config(Context& ctx) {
  if (ctx.config_path.empty()) return;
  const auto text = read_file(ctx.config_path);
  try {
    ctx.config = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(ctx.config_path + ": " + e.what());
  }
  if (!ctx.config.is_object()) throw SchemaError(ctx.config_path + ": config must be an object");
}

const json& section(const Context& ctx, const char* name) {
  static const json empty = json::object();
  auto it = ctx.config.find(name);
  return it == ctx.config.end() ? empty : *it;
}

fs::path out_dir(const Context& ctx) {
  std::string out = ctx.out;
  if (out.empty()) out = section(ctx, "paths").value("out", std::string());
  if (out.empty()) throw UsageError("--out is required");
  const fs::path dir = fs::absolute(out);
  if (!ctx.dry_run) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  return dir;
}

fs::path input_path(const std::string& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
  const fs::path path = fs::absolute(p);
  if (!fs::exists(path)) throw IoError(std::string(flag) + ": no such file " + path.string());
  return path;
}

oracle::OracleConfig oracle_config(const Context& ctx) {
  auto c = oracle::OracleConfig::from_json(section(ctx, "oracle"));
  if (!ctx.endpoint.empty()) c.endpoint_url = ctx.endpoint;
  if (!ctx.model.empty()) c.model_id = ctx.model;
  if (ctx.max_in_flight > 0) c.max_in_flight = ctx.max_in_flight;
  if (!ctx.cache_dir.empty()) {
    c.cache_dir = ctx.cache_dir;
  } else if (c.cache_dir.empty()) {
    c.cache_dir = section(ctx, "paths").value("cache_dir", std::string());
  }
  if (!c.cache_dir.empty()) c.cache_dir = fs::absolute(c.cache_dir);
  if (c.endpoint_url.empty()) throw UsageError("--endpoint (or oracle.endpoint_url) is required");
  if (c.model_id.empty()) throw UsageError("--model (or oracle.model_id) is required");
  c.check();
  return c;
}

corpus::TokenCounterSpec counter_spec(const Context& ctx) {
  corpus::TokenCounterSpec spec;
  const auto& cfg = section(ctx, "counter");
  if (!cfg.empty()) spec = corpus::TokenCounterSpec::from_json(cfg);
  if (!ctx.scheme.empty()) spec.scheme = corpus::parse_scheme(ctx.scheme);
  if (!ctx.bpe_path.empty()) spec.bpe_definition_path = fs::absolute(ctx.bpe_path);
  return spec;
}

std::string template_ref(const Context& ctx, const char* key, std::string flag,
                         std::string_view fallback) {
  if (!flag.empty()) return flag;
  return section(ctx, "templates").value(key, std::string(fallback));
}

bool looks_like_path(std::string_view ref) {
  return ref.find('/') != std::string_view::npos || ref.ends_with(".txt");
}

// Prints the plan for a dry run. Returns true when the caller should stop.
bool dry_run_plan(const Context& ctx, std::string_view subcommand,
                  const std::vector<fs::path>& outputs,
                  const std::optional<oracle::CallPlan>& plan = {}) {
  if (!ctx.dry_run) return false;
  ojson j;
  j["dry_run"] = true;
  j["subcommand"] = subcommand;
  j["oracle_requests"] = plan ? plan->total : 0;
  j["cached"] = plan ? plan->cached : 0;
  j["network_calls"] = plan ? plan->network : 0;
  j["outputs"] = ojson::array();
  for (const auto& o : outputs) j["outputs"].push_back(o.string());
  std::cerr << j.dump() << std::endl;
  return true;
}

corpus::Records read_dataset(const std::string& path, const std::string& format,
                             const char* flag) {
  return corpus::load_dataset(input_path(path, flag), corpus::parse_format(format));
}

void write_json(const fs::path& path, const ojson& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

// "name=path" or "path" (name = file stem).
std::pair<std::string, fs::path> named_path(const std::string& arg, const char* flag) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) {
    const auto p = input_path(arg, flag);
    return {p.stem().string(), p};
  }
  return {arg.substr(0, eq), input_path(arg.substr(eq + 1), flag)};
}

json read_json_file(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void add_common(CLI::App* sub, Context& ctx) {
  sub->add_option("--out", ctx.out, "Output directory");
  sub->add_option("--config", ctx.config_path, "JSON config file (flags take precedence)");
  sub->add_flag("--dry-run", ctx.dry_run, "Print the plan and planned oracle calls; write nothing");
  sub->add_option("--log-level", ctx.log_level, "trace, debug, info, warn, error or off");
}

void add_oracle(CLI::App* sub, Context& ctx) {
  sub->add_option("--endpoint", ctx.endpoint, "Chat-completions base URL");
  sub->add_option("--model", ctx.model, "Oracle model id");
  sub->add_option("--cache-dir", ctx.cache_dir, "Response cache directory");
  sub->add_option("--max-in-flight", ctx.max_in_flight, "Concurrent request limit");
}

void add_counter(CLI::App* sub, Context& ctx) {
  sub->add_option("--scheme", ctx.scheme, "Token scheme: bytes, unicode-words or bpe");
  sub->add_option("--bpe", ctx.bpe_path, "BPE definition file (scheme bpe)");
}

void print_error(ErrorKind kind, std::string_view message) {
  ojson j;
  j["error"] = to_string(kind);
  j["message"] = message;
  j["exit_code"] = exit_code(kind);
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"iftkit: instruction-data curation and evaluation"};
  app.require_subcommand(1);
  Context ctx;
  std::map<CLI::App*, std::function<void()>> actions;

  // Shared per-subcommand option storage.
  std::string input, format = "jsonl_generic", name;

  // ingest
  {
    auto* sub = app.add_subcommand("ingest", "Load a dataset and write it as JSON lines");
    add_common(sub, ctx);
    sub->add_option("--input", input)->required();
    sub->add_option("--format", format, "alpaca_json, lima_conversations, jsonl_sourced or jsonl_generic")
        ->required();
    sub->add_option("--name", name, "Output stem (default: corpus)");
    actions[sub] = [&] {
      const auto records = read_dataset(input, format, "--input");
      const auto dir = out_dir(ctx);
      const auto stem = name.empty() ? std::string("corpus") : name;
      const auto data = dir / (stem + ".jsonl");
      if (dry_run_plan(ctx, "ingest", {data, dir / "validation.json"})) return;
      corpus::write_dataset(records, data, corpus::DatasetFormat::kJsonlGeneric);
      const auto report = corpus::validate(records);
      write_json(dir / "validation.json", report.to_json());
      spdlog::info("ingested {} records", records.size());
    };
  }

  // validate
  {
    auto* sub = app.add_subcommand("validate", "Report empty outputs and duplicates");
    add_common(sub, ctx);
    sub->add_option("--input", input)->required();
    sub->add_option("--format", format);
    actions[sub] = [&] {
      const auto records = read_dataset(input, format, "--input");
      const auto dir = out_dir(ctx);
      if (dry_run_plan(ctx, "validate", {dir / "validation.json"})) return;
      const auto report = corpus::validate(records);
      write_json(dir / "validation.json", report.to_json());
      if (!report.clean()) spdlog::warn("dataset has flagged records; see validation.json");
    };
  }

  // annotate-lengths
  {
    auto* sub = app.add_subcommand("annotate-lengths", "Add response/instruction token counts");
    add_common(sub, ctx);
    add_counter(sub, ctx);
    sub->add_option("--input", input)->required();
    sub->add_option("--format", format);
    sub->add_option("--name", name, "Output stem (default: annotated)");
    actions[sub] = [&] {
      const corpus::TokenCounter counter(counter_spec(ctx));
      const auto records = read_dataset(input, format, "--input");
      const auto dir = out_dir(ctx);
      const auto stem = name.empty() ? std::string("annotated") : name;
      const auto data = dir / (stem + ".jsonl");
      const auto manifest = dir / (stem + ".lengths.json");
      if (dry_run_plan(ctx, "annotate-lengths", {data, manifest})) return;
      const auto annotated = corpus::annotate_lengths(records, counter);
      corpus::write_dataset(annotated.records, data, corpus::DatasetFormat::kJsonlGeneric);
      write_file_atomic(manifest, annotated.manifest.to_json().dump(2) + "\n");
    };
  }

  // stats
  {
    auto* sub = app.add_subcommand("stats", "Response length statistics of an annotated dataset");
    add_common(sub, ctx);
    sub->add_option("--input", input)->required();
    sub->add_option("--format", format);
    sub->add_option("--name", name, "Label (default: input stem)");
    actions[sub] = [&] {
      const auto records = read_dataset(input, format, "--input");
      const auto dir = out_dir(ctx);
      if (dry_run_plan(ctx, "stats", {dir / "length_stats.json"})) return;
      ojson j;
      j["name"] = name.empty() ? fs::path(input).stem().string() : name;
      j["stats"] = corpus::length_stats(records).to_json();
      write_json(dir / "length_stats.json", j);
    };
  }

  // select
  std::string strategy;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  bool source_required = false, exclude_flagged = false;
  {
    auto* sub = app.add_subcommand("select", "Select a subset of an annotated dataset");
    add_common(sub, ctx);
    sub->add_option("--input", input)->required();
    sub->add_option("--format", format);
    sub->add_option("--strategy", strategy,
                    "longest, shortest, random, score_threshold or stratified_longest");
    sub->add_option("--k", k, "Subset size (default 1000)");
    sub->add_option("--seed", seed, "Required for random selection");
    sub->add_option("--threshold", threshold, "Minimum score for score_threshold");
    sub->add_flag("--source-required", source_required,
                  "stratified_longest: fail on records without a source");
    sub->add_flag("--exclude-flagged", exclude_flagged,
                  "Drop empty outputs and duplicates before selecting");
    sub->add_option("--name", name, "Output stem (default: selected)");
    actions[sub] = [&] {
      select::SelectionSpec spec;
      const auto& cfg = section(ctx, "selection");
      if (!cfg.empty()) spec = select::SelectionSpec::from_json(cfg);
      if (!strategy.empty()) spec.strategy = select::parse_strategy(strategy);
      else if (cfg.empty()) throw UsageError("--strategy is required");
      if (k) spec.k = *k;
      if (seed) spec.seed = *seed;
      if (threshold) spec.threshold = *threshold;
      if (source_required) spec.source_field_required = true;
      if (spec.strategy == select::Strategy::kRandom && !spec.seed) {
        throw UsageError("random selection requires an explicit --seed");
      }
      if (spec.strategy != select::Strategy::kScoreThreshold && !spec.k) spec.k = 1000;
      spec.check();
      auto records = read_dataset(input, format, "--input");
      if (exclude_flagged) records = corpus::exclude_flagged(records);
      const auto dir = out_dir(ctx);
      const auto stem = name.empty() ? std::string("selected") : name;
      const auto data = dir / (stem + ".jsonl");
      const auto sel = dir / (stem + ".selection.json");
      if (dry_run_plan(ctx, "select", {data, sel})) return;
      const auto result = select::run_selection(records, spec);
      write_json(sel, result.to_json());
      corpus::write_dataset(select::materialize(records, result), data,
                            corpus::DatasetFormat::kJsonlGeneric);
      spdlog::info("selected {} of {} records", result.selected_ids.size(), records.size());
    };
  }

  // grade
  {
    auto* sub = app.add_subcommand("grade", "Score records 1-5 with the oracle");
    add_common(sub, ctx);
    add_oracle(sub, ctx);
    sub->add_option("--input", input)->required();
    sub->add_option("--format", format);
    sub->add_option("--name", name, "Output stem (default: graded)");
    actions[sub] = [&] {
      const auto records = read_dataset(input, format, "--input");
      const auto dir = out_dir(ctx);
      const oracle::OracleClient client(oracle_config(ctx));
      const auto stem = name.empty() ? std::string("graded") : name;
      std::vector<oracle::ChatRequest> requests;
      for (const auto& r : records) requests.push_back(judge::grade_request(r));
      if (dry_run_plan(ctx, "grade", {dir / (stem + ".jsonl"), dir / (stem + ".failures.jsonl")},
                       client.plan(requests))) {
        return;
      }
      const auto outcome = judge::grade_dataset(records, client);
      corpus::write_dataset(outcome.records, dir / (stem + ".jsonl"),
                            corpus::DatasetFormat::kJsonlGeneric);
      std::string failures;
      for (const auto& [id, reason] : outcome.failures) {
        failures += json({{"id", id}, {"error", reason}}).dump() + "\n";
      }
      write_file_atomic(dir / (stem + ".failures.jsonl"), failures);
      if (!outcome.failures.empty()) {
        spdlog::warn("{} record(s) could not be graded", outcome.failures.size());
      }
    };
  }

  // refine
  std::string selection_path, template_flag;
  std::optional<int> max_reasks;
  {
    auto* sub = app.add_subcommand("refine", "Introspection refinement of selected records");
    add_common(sub, ctx);
    add_oracle(sub, ctx);
    sub->add_option("--input", input, "Dataset the selection was drawn from")->required();
    sub->add_option("--format", format);
    sub->add_option("--selection", selection_path, "Selection JSON from `select`")->required();
    sub->add_option("--template", template_flag, "Template id or path");
    sub->add_option("--max-reasks", max_reasks);
    sub->add_option("--name", name, "Output stem (default: refined)");
    actions[sub] = [&] {
      const auto records = read_dataset(input, format, "--input");
      const auto selection =
          select::SelectionResult::from_json(read_json_file(input_path(selection_path, "--selection")));
      const auto ref = template_ref(ctx, "introspection", template_flag, refine::kDefaultTemplateId);
      const auto tmpl = looks_like_path(ref) ? PromptTemplate::load(input_path(ref, "--template"))
                                             : PromptTemplate::builtin(ref);
      refine::check_introspection_template(tmpl);
      refine::RefineOptions options;
      const auto& cfg = section(ctx, "refine");
      options.max_reasks = cfg.value("max_reasks", options.max_reasks);
      options.temperature = cfg.value("temperature", options.temperature);
      options.max_tokens = cfg.value("max_tokens", options.max_tokens);
      if (max_reasks) options.max_reasks = *max_reasks;
      if (options.max_reasks < 0) throw UsageError("--max-reasks must be >= 0");
      const auto dir = out_dir(ctx);
      const oracle::OracleClient client(oracle_config(ctx));
      const auto stem = name.empty() ? std::string("refined") : name;
      const auto selected = select::materialize(records, selection);
      if (dry_run_plan(ctx, "refine", {dir / (stem + ".jsonl"), dir / (stem + ".provenance.jsonl")},
                       client.plan(refine::planned_refinement_requests(selected, options, tmpl)))) {
        return;
      }
      const auto outcome = refine::refine_dataset(selection, records, client, options, tmpl);
      corpus::write_dataset(outcome.records, dir / (stem + ".jsonl"),
                            corpus::DatasetFormat::kJsonlGeneric);
      write_file_atomic(dir / (stem + ".provenance.jsonl"),
                        refine::provenance_jsonl(outcome.provenance));
      spdlog::info("refined {} of {} records", outcome.records.size() - outcome.unrefined_count(),
                   outcome.records.size());
    };
  }

  // judge
  std::string a_path, b_path, sets_path;
  {
    auto* sub = app.add_subcommand("judge", "Pairwise both-orders comparison of two models");
    add_common(sub, ctx);
    add_oracle(sub, ctx);
    add_counter(sub, ctx);
    sub->add_option("--a", a_path, "Responses of model A (JSON lines)")->required();
    sub->add_option("--b", b_path, "Responses of model B (JSON lines)")->required();
    sub->add_option("--sets", sets_path, "Evaluation sets JSON")->required();
    sub->add_option("--template", template_flag, "Template id or path");
    actions[sub] = [&] {
      const auto sets = judge::load_eval_sets(input_path(sets_path, "--sets"));
      for (const auto& w : judge::registry_size_warnings(sets)) spdlog::warn("{}", w);
      const auto a = judge::load_responses(input_path(a_path, "--a"));
      const auto b = judge::load_responses(input_path(b_path, "--b"));
      judge::check_coverage(sets, a, b);
      const auto ref = template_ref(ctx, "pairwise", template_flag, judge::kDefaultPairwiseTemplateId);
      const auto tmpl = looks_like_path(ref) ? judge::PairwiseTemplate::load(input_path(ref, "--template"))
                                             : judge::PairwiseTemplate::builtin(ref);
      judge::check_pairwise_template(tmpl);
      const corpus::TokenCounter counter(counter_spec(ctx));
      const auto dir = out_dir(ctx);
      const oracle::OracleClient client(oracle_config(ctx));
      if (dry_run_plan(ctx, "judge",
                       {dir / "win_rates.json", dir / "win_rates.md", dir / "judgments.jsonl"},
                       client.plan(judge::planned_judge_requests(sets, a, b, tmpl)))) {
        return;
      }
      const auto result = judge::evaluate_models(sets, a, b, client, counter, tmpl);
      write_json(dir / "win_rates.json", result.table.to_json());
      write_file_atomic(dir / "win_rates.md", result.table.to_markdown());
      write_file_atomic(dir / "judgments.jsonl", judge::judgment_log_jsonl(result.pairs));
      if (result.table.overall.excluded > 0) {
        spdlog::warn("{} pair(s) excluded as unevaluable", result.table.overall.excluded);
      }
    };
  }

  // report
  std::vector<std::string> rep_selections, rep_win_rates, rep_lengths, rep_scores;
  std::string rep_contamination;
  {
    auto* sub = app.add_subcommand("report", "Render report.md, report.json and tables/*.csv");
    add_common(sub, ctx);
    sub->add_option("--selection", rep_selections, "[name=]selection.json (repeatable)");
    sub->add_option("--win-rates", rep_win_rates, "win_rates.json (repeatable)");
    sub->add_option("--lengths", rep_lengths, "[name=]annotated dataset (repeatable)");
    sub->add_option("--scores", rep_scores, "[name=]scored dataset (repeatable)");
    sub->add_option("--contamination", rep_contamination, "contamination.json");
    actions[sub] = [&] {
      analysis::ReportInputs in;
      for (const auto& s : rep_selections) {
        auto [n, p] = named_path(s, "--selection");
        in.selections.push_back({n, select::SelectionResult::from_json(read_json_file(p))});
      }
      for (const auto& w : rep_win_rates) {
        in.win_rates.push_back(judge::WinRateTable::from_json(read_json_file(input_path(w, "--win-rates"))));
      }
      for (const auto& l : rep_lengths) {
        auto [n, p] = named_path(l, "--lengths");
        in.length_stats.push_back(
            {n, corpus::length_stats(corpus::load_dataset(p, corpus::DatasetFormat::kJsonlGeneric))});
      }
      for (const auto& s : rep_scores) {
        auto [n, p] = named_path(s, "--scores");
        in.score_histograms.push_back(analysis::score_histogram(
            n, corpus::load_dataset(p, corpus::DatasetFormat::kJsonlGeneric)));
      }
      if (!rep_contamination.empty()) {
        const auto j = read_json_file(input_path(rep_contamination, "--contamination"));
        const auto& hits = j.is_object() ? j.at("hits") : j;
        for (const auto& h : hits) {
          in.contamination.push_back({h.at("train_id").get<std::string>(),
                                      h.at("eval_id").get<std::string>(), h.at("bleu").get<double>(),
                                      h.value("matched_ngram_sample", std::string())});
        }
      }
      const auto dir = out_dir(ctx);
      if (dry_run_plan(ctx, "report", {dir / "report.md", dir / "report.json", dir / "tables"})) {
        return;
      }
      analysis::emit_report(in, dir);
    };
  }

  // contamination
  std::string train_path, eval_path, train_format = "jsonl_generic", eval_format = "jsonl_generic";
  std::string field = "prompt";
  double scan_threshold = 20.0;
  bool no_prefilter = false;
  unsigned threads = 0;
  {
    auto* sub = app.add_subcommand("contamination", "BLEU overlap scan between train and eval data");
    add_common(sub, ctx);
    sub->add_option("--train", train_path)->required();
    sub->add_option("--eval", eval_path)->required();
    sub->add_option("--train-format", train_format);
    sub->add_option("--eval-format", eval_format);
    sub->add_option("--threshold", scan_threshold, "Report pairs with BLEU above this (0-100)");
    sub->add_option("--field", field, "prompt, output or all");
    sub->add_flag("--no-prefilter", no_prefilter, "Score every pair");
    sub->add_option("--threads", threads);
    actions[sub] = [&] {
      analysis::ScanOptions options;
      options.threshold = scan_threshold;
      options.field = analysis::parse_scan_field(field);
      options.prefilter = !no_prefilter;
      options.threads = threads;
      const auto train = read_dataset(train_path, train_format, "--train");
      const auto eval = read_dataset(eval_path, eval_format, "--eval");
      const auto dir = out_dir(ctx);
      if (dry_run_plan(ctx, "contamination", {dir / "contamination.json"})) return;
      const auto hits = analysis::contamination_scan(train, eval, options);
      ojson j;
      j["threshold"] = options.threshold;
      j["max_n"] = options.max_n;
      j["field"] = field;
      j["train_records"] = train.size();
      j["eval_records"] = eval.size();
      j["hits"] = ojson::array();
      for (const auto& h : hits) j["hits"].push_back(h.to_json());
      write_json(dir / "contamination.json", j);
      spdlog::info("{} contamination hit(s)", hits.size());
    };
  }

  // loss-normalize
  {
    auto* sub = app.add_subcommand("loss-normalize", "Divide a loss curve by its first value");
    add_common(sub, ctx);
    sub->add_option("--input", input, "CSV with header step,loss")->required();
    actions[sub] = [&] {
      const auto path = input_path(input, "--input");
      const auto curve = analysis::load_loss_csv(path);
      const auto dir = out_dir(ctx);
      const auto out = dir / (path.stem().string() + ".normalized.csv");
      if (dry_run_plan(ctx, "loss-normalize", {out})) return;
      write_file_atomic(out, analysis::loss_curve_csv(analysis::normalize_loss_curve(curve)));
    };
  }

  // epoch-track
  std::vector<std::string> epoch_paths;
  std::string baseline_path;
  {
    auto* sub = app.add_subcommand("epoch-track", "Per-epoch response length and win rate");
    add_common(sub, ctx);
    add_oracle(sub, ctx);
    add_counter(sub, ctx);
    sub->add_option("--sets", sets_path)->required();
    sub->add_option("--baseline", baseline_path, "Baseline responses")->required();
    sub->add_option("--epoch", epoch_paths, "Responses per epoch, in epoch order (repeatable)")
        ->required();
    sub->add_option("--template", template_flag, "Pairwise template id or path");
    actions[sub] = [&] {
      const auto sets = judge::load_eval_sets(input_path(sets_path, "--sets"));
      const auto baseline = judge::load_responses(input_path(baseline_path, "--baseline"));
      std::vector<judge::ResponseSet> epochs;
      for (const auto& e : epoch_paths) epochs.push_back(judge::load_responses(input_path(e, "--epoch")));
      analysis::check_epoch_coverage(sets, epochs, baseline);
      const auto ref = template_ref(ctx, "pairwise", template_flag, judge::kDefaultPairwiseTemplateId);
      const auto tmpl = looks_like_path(ref) ? judge::PairwiseTemplate::load(input_path(ref, "--template"))
                                             : judge::PairwiseTemplate::builtin(ref);
      const corpus::TokenCounter counter(counter_spec(ctx));
      const auto dir = out_dir(ctx);
      const oracle::OracleClient client(oracle_config(ctx));
      std::vector<oracle::ChatRequest> requests;
      for (const auto& e : epochs) {
        auto r = judge::planned_judge_requests(sets, e, baseline, tmpl);
        requests.insert(requests.end(), r.begin(), r.end());
      }
      if (dry_run_plan(ctx, "epoch-track", {dir / "epochs.json", dir / "epochs.csv"},
                       client.plan(requests))) {
        return;
      }
      const auto table = analysis::track_epoch_metrics(sets, epochs, baseline, client, counter, tmpl);
      write_json(dir / "epochs.json", table.to_json());
      write_file_atomic(dir / "epochs.csv", table.to_csv());
    };
  }

  // genconfig
  int max_new_tokens = 2048;
  std::optional<int> min_new_tokens;
  std::string length_control = "none";
  {
    auto* sub = app.add_subcommand("genconfig", "Generation config and length-control prompts");
    add_common(sub, ctx);
    sub->add_option("--max-new-tokens", max_new_tokens);
    sub->add_option("--min-new-tokens", min_new_tokens);
    sub->add_option("--length-control", length_control,
                    "none, concise, paragraphs:N or min-tokens:T");
    sub->add_option("--input", input, "Dataset whose instructions get the length-control suffix");
    sub->add_option("--format", format);
    actions[sub] = [&] {
      const auto mode = analysis::LengthControlMode::parse(length_control);
      auto min = min_new_tokens;
      if (mode.kind == analysis::LengthControlMode::Kind::kMinTokens) {
        if (min && *min != mode.value) {
          throw UsageError("--min-new-tokens conflicts with --length-control " + length_control);
        }
        min = mode.value;
      }
      const auto config = analysis::emit_generation_config(max_new_tokens, min);
      std::optional<corpus::Records> records;
      if (!input.empty()) records = read_dataset(input, format, "--input");
      const auto dir = out_dir(ctx);
      std::vector<fs::path> outputs{dir / "generation_config.json"};
      if (records) outputs.push_back(dir / "prompts.jsonl");
      if (dry_run_plan(ctx, "genconfig", outputs)) return;
      write_json(dir / "generation_config.json", config);
      if (records) {
        for (auto& r : *records) r.instruction = analysis::apply_length_control(r.instruction, mode);
        corpus::write_dataset(*records, dir / "prompts.jsonl", corpus::DatasetFormat::kJsonlGeneric);
      }
    };
  }

  // trainconfig
  std::string base_model, dataset_name;
  bool neftune = false, all_rows = false;
  {
    auto* sub = app.add_subcommand("trainconfig", "Fine-tuning hyperparameters for a known run");
    add_common(sub, ctx);
    sub->add_option("--base-model", base_model, "llama2_7b, llama2_13b or mistral_7b_v01");
    sub->add_option("--dataset", dataset_name, "e.g. Alpaca-1k-longest");
    sub->add_flag("--neftune", neftune, "Include the NEFTune noise level");
    sub->add_flag("--all", all_rows, "Write every known row to train_configs.json");
    actions[sub] = [&] {
      const auto dir = out_dir(ctx);
      if (all_rows) {
        if (dry_run_plan(ctx, "trainconfig", {dir / "train_configs.json"})) return;
        ojson rows = ojson::array();
        for (const auto& row : analysis::train_config_table()) {
          auto r = row;
          if (neftune) r.neftune_noise_level = analysis::neftune_noise_level(r.base_model);
          rows.push_back(r.to_json());
        }
        write_json(dir / "train_configs.json", rows);
        return;
      }
      if (base_model.empty() || dataset_name.empty()) {
        throw UsageError("--base-model and --dataset are required (or --all)");
      }
      const auto config =
          analysis::emit_train_config(analysis::parse_base_model(base_model), dataset_name, neftune);
      if (dry_run_plan(ctx, "trainconfig", {dir / "train_config.json"})) return;
      write_json(dir / "train_config.json", config.to_json());
    };
  }

  // export-alpacaeval
  std::string responses_path, set_name;
  {
    auto* sub = app.add_subcommand("export-alpacaeval", "Write model outputs in AlpacaEval format");
    add_common(sub, ctx);
    sub->add_option("--responses", responses_path)->required();
    sub->add_option("--sets", sets_path, "Evaluation sets JSON holding the instructions")->required();
    sub->add_option("--set", set_name, "Set to export (default: all sets in order)");
    actions[sub] = [&] {
      const auto sets = judge::load_eval_sets(input_path(sets_path, "--sets"));
      std::vector<judge::EvalInstruction> instructions;
      bool found = set_name.empty();
      for (const auto& s : sets) {
        if (!set_name.empty() && s.name != set_name) continue;
        found = true;
        instructions.insert(instructions.end(), s.instructions.begin(), s.instructions.end());
      }
      if (!found) throw UsageError("no evaluation set named '" + set_name + "'");
      if (instructions.size() != judge::kAlpacaEvalSize) {
        spdlog::warn("exporting {} instructions; the AlpacaEval set has {}", instructions.size(),
                     judge::kAlpacaEvalSize);
      }
      const auto responses = judge::load_responses(input_path(responses_path, "--responses"));
      const auto dir = out_dir(ctx);
      const auto exported = judge::export_alpacaeval(instructions, responses);
      if (dry_run_plan(ctx, "export-alpacaeval", {dir / "alpacaeval_outputs.json"})) return;
      write_json(dir / "alpacaeval_outputs.json", exported);
    };
  }

  // serve
  std::string host = "127.0.0.1", ui_dir;
  int port = 8080;
  {
    auto* sub = app.add_subcommand("serve", "Human-evaluation backend and UI bundle");
    add_common(sub, ctx);
    sub->add_option("--host", host);
    sub->add_option("--port", port);
    sub->add_option("--ui", ui_dir, "Built UI bundle to serve at /");
    actions[sub] = [&] {
      const auto dir = out_dir(ctx);
      if (!ui_dir.empty()) input_path(ui_dir, "--ui");
      if (dry_run_plan(ctx, "serve", {dir / "events.jsonl"})) return;
      humaneval::HumanEvalService service(dir / "events.jsonl");
      humaneval::HumanEvalServer server(service, ui_dir.empty() ? fs::path() : fs::absolute(ui_dir));
      spdlog::info("serving on http://{}:{}", host, port);
      server.run(host, port);
    };
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(ErrorKind::kUsage, e.what());
    return exit_code(ErrorKind::kUsage);
  }

  try {
    setup_logging(ctx.log_level);
    load_config(ctx);
    for (auto* sub : app.get_subcommands()) actions.at(sub)();
    return 0;
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    print_error(ErrorKind::kSchema, e.what());
    return exit_code(ErrorKind::kSchema);
  } catch (const std::exception& e) {
    print_error(ErrorKind::kPrecondition, e.what());
    return exit_code(ErrorKind::kPrecondition);
  }
}

}  // namespace iftkit::cli
