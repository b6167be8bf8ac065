#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace iftkit::analysis {

struct LossPoint {
  double step;
  double loss;
};

struct LossCurve {
  std::vector<LossPoint> points;
  bool normalized = false;
};

// CSV with header "step,loss". Steps must increase strictly and losses be
// positive.
LossCurve parse_loss_csv(std::string_view text, std::string_view origin = "<memory>");
LossCurve load_loss_csv(const std::filesystem::path& path);
std::string loss_curve_csv(const LossCurve& curve);

// Divides every loss by the first one. Dividing x by itself is exact in
// IEEE arithmetic, so the first point is exactly 1.0 and a second pass is
// the identity.
LossCurve normalize_loss_curve(const LossCurve& curve);

}  // namespace iftkit::analysis
