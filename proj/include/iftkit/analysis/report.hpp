#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iftkit/analysis/contamination.hpp"
#include "iftkit/corpus/lengths.hpp"
#include "iftkit/judge/evaluation.hpp"
#include "iftkit/select/selection.hpp"

namespace iftkit::analysis {

struct NamedSelection {
  std::string name;
  select::SelectionResult selection;
};

struct NamedLengthStats {
  std::string name;
  corpus::LengthStats stats;
};

// Score counts at 0.5 granularity, keyed by bucket lower edge.
struct ScoreHistogram {
  std::string name;
  std::map<double, std::size_t> buckets;
  std::size_t unscored = 0;
};

ScoreHistogram score_histogram(std::string name, const corpus::Records& records);

struct ReportInputs {
  std::vector<NamedSelection> selections;
  std::vector<judge::WinRateTable> win_rates;
  std::vector<NamedLengthStats> length_stats;
  std::vector<ScoreHistogram> score_histograms;
  std::vector<ContaminationHit> contamination;
};

// Relative path -> file content. Rendering is a pure function of the inputs.
using ReportBundle = std::map<std::string, std::string>;

ReportBundle render_report(const ReportInputs& inputs);

// Writes report.md, report.json and tables/*.csv under `dir`.
void write_report(const ReportBundle& bundle, const std::filesystem::path& dir);

inline void emit_report(const ReportInputs& inputs, const std::filesystem::path& dir) {
  write_report(render_report(inputs), dir);
}

// RFC 4180 field quoting.
std::string csv_field(std::string_view field);

}  // namespace iftkit::analysis
