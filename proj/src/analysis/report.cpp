#include "iftkit/analysis/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"

namespace iftkit::analysis {
namespace {

constexpr std::string_view kNoData = "No data.\n";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) { row(header); }

  void row(std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
      if (!first) out_ += ',';
      out_ += csv_field(f);
      first = false;
    }
    out_ += '\n';
  }

  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

}  // namespace

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

ScoreHistogram score_histogram(std::string name, const corpus::Records& records) {
  ScoreHistogram h;
  h.name = std::move(name);
  for (const auto& r : records) {
    if (r.score) ++h.buckets[std::floor(*r.score * 2) / 2];
    else ++h.unscored;
  }
  return h;
}

ReportBundle render_report(const ReportInputs& in) {
  ReportBundle bundle;
  std::ostringstream md;
  nlohmann::ordered_json js;
  md << "# iftkit report\n";

  // Selections
  md << "\n## Selections\n\n";
  Csv sel_csv({"name", "strategy", "k", "selected", "corpus_manifest_hash"});
  js["selections"] = nlohmann::ordered_json::array();
  if (in.selections.empty()) {
    md << kNoData;
  } else {
    md << "| Name | Strategy | k | Selected | Corpus |\n|---|---|---:|---:|---|\n";
    for (const auto& s : in.selections) {
      const auto& spec = s.selection.spec;
      const std::string strategy(select::strategy_name(spec.strategy));
      const std::string k = spec.k ? std::to_string(*spec.k) : "";
      const std::string n = std::to_string(s.selection.selected_ids.size());
      md << "| " << md_cell(s.name) << " | " << strategy << " | " << k << " | " << n
         << " | " << s.selection.corpus_manifest_hash.substr(0, 12) << " |\n";
      sel_csv.row({s.name, strategy, k, n, s.selection.corpus_manifest_hash});
      nlohmann::ordered_json j;
      j["name"] = s.name;
      j["spec"] = spec.to_json();
      j["selected"] = s.selection.selected_ids.size();
      j["corpus_manifest_hash"] = s.selection.corpus_manifest_hash;
      js["selections"].push_back(std::move(j));
    }
  }
  bundle["tables/selections.csv"] = sel_csv.str();

  // Win rates
  md << "\n## Win rates\n\n";
  Csv win_csv({"model_a", "model_b", "set", "n", "wins", "ties", "losses", "excluded",
               "win_pct", "tie_pct", "lose_pct"});
  js["win_rates"] = nlohmann::ordered_json::array();
  if (in.win_rates.empty()) {
    md << kNoData;
  } else {
    for (const auto& t : in.win_rates) {
      md << "### " << md_cell(t.model_a) << " vs " << md_cell(t.model_b) << "\n\n"
         << "Judge: " << md_cell(t.judge_model) << ", protocol " << t.protocol << ".\n\n"
         << t.to_markdown() << "\n";
      auto add = [&](const judge::WinRateRow& r) {
        win_csv.row({t.model_a, t.model_b, r.name, std::to_string(r.n),
                     std::to_string(r.wins), std::to_string(r.ties), std::to_string(r.losses),
                     std::to_string(r.excluded), num(r.win_pct), num(r.tie_pct),
                     num(r.lose_pct)});
      };
      for (const auto& r : t.rows) add(r);
      add(t.overall);
      js["win_rates"].push_back(t.to_json());
    }
  }
  bundle["tables/win_rates.csv"] = win_csv.str();

  // Length statistics
  md << "\n## Response lengths\n\n";
  Csv len_csv({"name", "count", "mean", "median", "min", "max"});
  Csv hist_csv({"name", "lo", "hi", "count"});
  js["length_stats"] = nlohmann::ordered_json::array();
  if (in.length_stats.empty()) {
    md << kNoData;
  } else {
    md << "| Name | Count | Mean | Median | Min | Max |\n|---|---:|---:|---:|---:|---:|\n";
    for (const auto& l : in.length_stats) {
      const auto& s = l.stats;
      md << "| " << md_cell(l.name) << " | " << s.count << " | " << fixed2(s.mean) << " | "
         << fixed2(s.median) << " | " << s.min << " | " << s.max << " |\n";
      len_csv.row({l.name, std::to_string(s.count), num(s.mean), num(s.median),
                   std::to_string(s.min), std::to_string(s.max)});
      for (const auto& b : s.histogram) {
        hist_csv.row({l.name, std::to_string(b.lo), std::to_string(b.hi),
                      std::to_string(b.count)});
      }
      nlohmann::ordered_json j;
      j["name"] = l.name;
      j["stats"] = s.to_json();
      js["length_stats"].push_back(std::move(j));
    }
  }
  bundle["tables/length_stats.csv"] = len_csv.str();
  bundle["tables/length_histograms.csv"] = hist_csv.str();

  // Score histograms
  md << "\n## Score distributions\n\n";
  Csv score_csv({"name", "score", "count"});
  js["score_histograms"] = nlohmann::ordered_json::array();
  if (in.score_histograms.empty()) {
    md << kNoData;
  } else {
    md << "| Name | Score | Count |\n|---|---:|---:|\n";
    for (const auto& h : in.score_histograms) {
      nlohmann::ordered_json buckets = nlohmann::ordered_json::array();
      for (const auto& [lo, n] : h.buckets) {
        md << "| " << md_cell(h.name) << " | " << fixed2(lo) << " | " << n << " |\n";
        score_csv.row({h.name, num(lo), std::to_string(n)});
        buckets.push_back({{"score", lo}, {"count", n}});
      }
      md << "| " << md_cell(h.name) << " | unscored | " << h.unscored << " |\n";
      score_csv.row({h.name, "unscored", std::to_string(h.unscored)});
      nlohmann::ordered_json j;
      j["name"] = h.name;
      j["buckets"] = std::move(buckets);
      j["unscored"] = h.unscored;
      js["score_histograms"].push_back(std::move(j));
    }
  }
  bundle["tables/score_histograms.csv"] = score_csv.str();

  // Contamination
  md << "\n## Contamination\n\n";
  Csv hit_csv({"train_id", "eval_id", "bleu", "matched_ngram_sample"});
  js["contamination"] = nlohmann::ordered_json::array();
  if (in.contamination.empty()) {
    md << kNoData;
  } else {
    md << "| Train id | Eval id | BLEU | Sample |\n|---|---|---:|---|\n";
    for (const auto& h : in.contamination) {
      md << "| " << md_cell(h.train_id) << " | " << md_cell(h.eval_id) << " | "
         << fixed2(h.bleu) << " | " << md_cell(h.matched_ngram_sample) << " |\n";
      hit_csv.row({h.train_id, h.eval_id, num(h.bleu), h.matched_ngram_sample});
      js["contamination"].push_back(h.to_json());
    }
  }
  bundle["tables/contamination.csv"] = hit_csv.str();

  bundle["report.md"] = md.str();
  bundle["report.json"] = js.dump(2) + "\n";
  return bundle;
}

void write_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "tables", ec);
  if (ec) throw IoError("cannot create " + (dir / "tables").string() + ": " + ec.message());
  for (const auto& [rel, content] : bundle) write_file_atomic(dir / rel, content);
}

}  // namespace iftkit::analysis
