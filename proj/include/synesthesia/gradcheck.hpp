#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synesthesia/strokes.hpp"

namespace synesthesia {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int configs = 100;
  double epsilon = 1e-4;
  /// Test hook: when non-empty, the analytic gradient of the named component
  /// is scaled by 1.05 before comparison so the harness must report failure.
  std::string corrupt_component;
};

struct ComponentReport {
  std::string name;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  long checks = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<ComponentReport> components;
  bool all_passed() const;
};

/// render_plan, augment_views, encode_image, image_emotion, loss_pixel_l2,
/// loss_natural_sound, in report order.
const std::vector<std::string>& gradcheck_components();

/// |analytic - numeric| / max(|analytic|, |numeric|, floor)
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Random plan drawn from the smooth regime used by the checks: strokes are
/// thick relative to the edge softness and gently bent, so the coverage field
/// is differentiable almost everywhere at finite-difference scale. Strokes
/// whose centerline cone or end-cap seam passes near a pixel center are redrawn.
PaintingPlan random_gradcheck_plan(std::uint64_t seed);

GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace synesthesia
