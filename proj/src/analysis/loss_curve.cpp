#include "iftkit/analysis/loss_curve.hpp"

#include <charconv>
#include <cstdio>

#include "iftkit/common/error.hpp"
#include "iftkit/common/files.hpp"
#include "iftkit/common/prompt_template.hpp"

namespace iftkit::analysis {

namespace {

double parse_double(std::string_view field, std::string_view origin, std::size_t line) {
  field = trim(field);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(std::string(origin) + " line " + std::to_string(line) +
                     ": not a number: '" + std::string(field) + "'");
  }
  return v;
}

void check_curve(const LossCurve& curve) {
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (!(curve.points[i].loss > 0)) {
      throw ValidationError("loss at point " + std::to_string(i) + " must be positive");
    }
    if (i > 0 && !(curve.points[i].step > curve.points[i - 1].step)) {
      throw ValidationError("loss curve steps must increase strictly (point " +
                            std::to_string(i) + ")");
    }
  }
}

}  // namespace

LossCurve parse_loss_csv(std::string_view text, std::string_view origin) {
  LossCurve curve;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "step,loss") {
        throw ParseError(std::string(origin) + ": expected header 'step,loss'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError(std::string(origin) + " line " + std::to_string(line_no) +
                       ": expected two columns");
    }
    curve.points.push_back({parse_double(line.substr(0, comma), origin, line_no),
                            parse_double(line.substr(comma + 1), origin, line_no)});
  }
  if (!header_seen) throw ParseError(std::string(origin) + ": empty loss CSV");
  check_curve(curve);
  return curve;
}

LossCurve load_loss_csv(const std::filesystem::path& path) {
  return parse_loss_csv(read_file(path), path.string());
}

std::string loss_curve_csv(const LossCurve& curve) {
  std::string out = "step,loss\n";
  char buf[64];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.step, p.loss);
    out += buf;
  }
  return out;
}

LossCurve normalize_loss_curve(const LossCurve& curve) {
  if (curve.points.empty()) throw ValidationError("cannot normalize an empty loss curve");
  const double first = curve.points.front().loss;
  if (!(first > 0)) throw ValidationError("first loss must be positive to normalize");
  LossCurve out;
  out.normalized = true;
  out.points.reserve(curve.points.size());
  for (const auto& p : curve.points) out.points.push_back({p.step, p.loss / first});
  return out;
}

}  // namespace iftkit::analysis
