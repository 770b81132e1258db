#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "synesthesia/canvas.hpp"

namespace synesthesia {

/// One brush stroke. Positions are normalized to the canvas; length, bend and
/// thickness are fractions of the canvas diagonal.
struct StrokeParams {
  double x = 0.5;
  double y = 0.5;
  double orientation = 0.0;  ///< radians, wrapped to [-pi, pi)
  double length = 0.1;
  double bend = 0.0;
  double thickness = 0.01;  ///< half-width
  Rgb color{0.0, 0.0, 0.0};
  double opacity = 1.0;

  friend bool operator==(const StrokeParams&, const StrokeParams&) = default;
};

/// Valid closed ranges of StrokeParams fields.
namespace stroke_limits {
inline constexpr double kLengthMin = 0.01, kLengthMax = 0.5;
inline constexpr double kBendMin = -0.25, kBendMax = 0.25;
inline constexpr double kThicknessMin = 0.002, kThicknessMax = 0.1;
}  // namespace stroke_limits

/// Scalar slots of a stroke in the flattened parameter layout.
enum class StrokeField : int {
  kX = 0,
  kY,
  kOrientation,
  kLength,
  kBend,
  kThickness,
  kRed,
  kGreen,
  kBlue,
  kOpacity,
};
inline constexpr int kStrokeFieldCount = 10;

double& field(StrokeParams& s, StrokeField f);
double field(const StrokeParams& s, StrokeField f);
const char* field_name(StrokeField f);
/// Geometry fields use the geometry learning rate; color/opacity the color one.
bool is_geometry_field(StrokeField f);

bool within_limits(const StrokeParams& s);
/// Clamps every field into its valid range and wraps the orientation.
void project(StrokeParams& s);
/// Wraps an angle into [-pi, pi).
double wrap_angle(double theta);

struct PaintingPlan {
  int canvas_width_px = 256;
  int canvas_height_px = 256;
  Rgb background{1.0, 1.0, 1.0};
  std::vector<StrokeParams> strokes;
  double softness = 0.004;

  double diagonal_px() const;
  /// Throws ParameterError on non-positive dimensions or softness.
  void validate() const;

  friend bool operator==(const PaintingPlan&, const PaintingPlan&) = default;
};

/// Gradient of a scalar w.r.t. a plan; strokes hold per-field partials.
struct PlanGradient {
  std::vector<StrokeParams> strokes;
  Rgb background{0.0, 0.0, 0.0};

  static PlanGradient zeros(std::size_t n_strokes);
  PlanGradient& operator+=(const PlanGradient& other);
  /// this += scale * other
  void add_scaled(const PlanGradient& other, double scale);
};

/// Flattened layout: 10 scalars per stroke in StrokeField order, then the
/// background RGB.
std::vector<double> flatten(const PaintingPlan& plan);
void unflatten(std::span<const double> values, PaintingPlan& plan);
std::vector<double> flatten(const PlanGradient& grad);

using Point2 = std::array<double, 2>;

/// Quadratic Bezier in pixel coordinates: B(t) = (1-t)^2 P0 + 2t(1-t) P1 + t^2 P2.
struct QuadBezier {
  Point2 p0, p1, p2;

  Point2 eval(double t) const;
};

struct NearestPoint {
  double t;
  double distance;
  Point2 point;
};

QuadBezier stroke_geometry(const StrokeParams& s, int width_px, int height_px);

/// Exact nearest point on the curve: real roots of the cubic
/// (B(t) - p) . B'(t) = 0 on [0, 1], compared with both endpoints.
NearestPoint nearest_point(const QuadBezier& curve, const Point2& p);

/// Distance to the polyline through `segments + 1` uniformly spaced samples.
double polyline_distance(const QuadBezier& curve, const Point2& p, int segments = 64);

CanvasImage render_plan(const PaintingPlan& plan);

/// Gradient of <upstream, render_plan(plan)> w.r.t. every stroke field and the
/// background.
PlanGradient render_plan_vjp(const PaintingPlan& plan, const Image& upstream);

enum class InitStrategy { kUniformRandom, kImageSeeded };

struct CanvasConfig {
  int width_px = 256;
  int height_px = 256;
  Rgb background{1.0, 1.0, 1.0};
  double softness = 0.004;
};

PaintingPlan init_plan(InitStrategy strategy, int n_strokes, const CanvasConfig& canvas,
                       const std::optional<CanvasImage>& target, std::uint64_t seed);

}  // namespace synesthesia
