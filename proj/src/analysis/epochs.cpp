#include "iftkit/analysis/epochs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "iftkit/common/error.hpp"

namespace iftkit::analysis {

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw PreconditionError("pearson: series lengths differ");
  const std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  double r = static_cast<double>(sxy / std::sqrt(sxx * syy));
  return std::clamp(r, -1.0, 1.0);
}

nlohmann::ordered_json EpochTable::to_json() const {
  nlohmann::ordered_json j;
  j["baseline"] = baseline;
  j["judge_model"] = judge_model;
  j["protocol"] = protocol;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["epoch"] = r.epoch;
    row["generator"] = r.generator;
    row["avg_tokens"] = r.avg_tokens;
    row["n"] = r.result.n;
    row["wins"] = r.result.wins;
    row["ties"] = r.result.ties;
    row["losses"] = r.result.losses;
    row["excluded"] = r.result.excluded;
    row["win_rate"] = r.result.win_pct;
    row["tie_rate"] = r.result.tie_pct;
    row["lose_rate"] = r.result.lose_pct;
    j["rows"].push_back(std::move(row));
  }
  if (length_win_correlation) {
    j["length_win_correlation"] = *length_win_correlation;
  } else {
    j["length_win_correlation"] = nullptr;
    j["correlation_note"] = "undefined (fewer than two epochs or zero variance)";
  }
  return j;
}

std::string EpochTable::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,generator,avg_tokens,n,wins,ties,losses,excluded,win_rate\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.generator << ',' << r.avg_tokens << ',' << r.result.n << ','
        << r.result.wins << ',' << r.result.ties << ',' << r.result.losses << ','
        << r.result.excluded << ',' << r.result.win_pct << '\n';
  }
  return out.str();
}

EpochTable epoch_table(std::string baseline, std::vector<EpochRow> rows) {
  EpochTable t;
  t.baseline = std::move(baseline);
  std::vector<double> lengths, wins;
  for (const auto& r : rows) {
    lengths.push_back(r.avg_tokens);
    wins.push_back(r.result.win_pct);
  }
  t.length_win_correlation = pearson(lengths, wins);
  t.rows = std::move(rows);
  return t;
}

void check_epoch_coverage(const std::vector<judge::EvalSet>& sets,
                          const std::vector<judge::ResponseSet>& epochs,
                          const judge::ResponseSet& baseline) {
  if (epochs.empty()) throw ValidationError("epoch tracking needs at least one epoch file");
  auto keys = [](const judge::ResponseSet& r) {
    std::set<std::string> k;
    for (const auto& [id, out] : r.outputs) k.insert(id);
    return k;
  };
  const auto first = keys(epochs.front());
  for (std::size_t e = 1; e < epochs.size(); ++e) {
    if (keys(epochs[e]) != first) {
      throw ValidationError("epoch " + std::to_string(e + 1) +
                            " covers a different instruction set than epoch 1");
    }
  }
  for (const auto& e : epochs) judge::check_coverage(sets, e, baseline);
}

EpochTable track_epoch_metrics(const std::vector<judge::EvalSet>& sets,
                               const std::vector<judge::ResponseSet>& epochs,
                               const judge::ResponseSet& baseline,
                               const oracle::OracleClient& client,
                               const corpus::TokenCounter& counter,
                               const judge::PairwiseTemplate& tmpl) {
  check_epoch_coverage(sets, epochs, baseline);
  std::vector<EpochRow> rows;
  std::string judge_model;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    auto result = judge::evaluate_models(sets, epochs[e], baseline, client, counter, tmpl);
    EpochRow row;
    row.epoch = static_cast<int>(e + 1);
    row.generator = epochs[e].generator;
    row.avg_tokens = result.table.avg_tokens_a;
    row.result = result.table.overall;
    judge_model = result.table.judge_model;
    rows.push_back(std::move(row));
  }
  auto table = epoch_table(baseline.generator, std::move(rows));
  table.judge_model = judge_model;
  return table;
}

}  // namespace iftkit::analysis
