#include "synesthesia/strokes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "synesthesia/error.hpp"
#include "synesthesia/parallel.hpp"
#include "synesthesia/rng.hpp"

namespace synesthesia {

using std::numbers::pi;

double& field(StrokeParams& s, StrokeField f) {
  switch (f) {
    case StrokeField::kX: return s.x;
    case StrokeField::kY: return s.y;
    case StrokeField::kOrientation: return s.orientation;
    case StrokeField::kLength: return s.length;
    case StrokeField::kBend: return s.bend;
    case StrokeField::kThickness: return s.thickness;
    case StrokeField::kRed: return s.color[0];
    case StrokeField::kGreen: return s.color[1];
    case StrokeField::kBlue: return s.color[2];
    case StrokeField::kOpacity: return s.opacity;
  }
  throw ParameterError("invalid stroke field");
}

double field(const StrokeParams& s, StrokeField f) {
  return field(const_cast<StrokeParams&>(s), f);
}

const char* field_name(StrokeField f) {
  static constexpr const char* kNames[kStrokeFieldCount] = {
      "x", "y", "orientation", "length", "bend", "thickness", "red", "green", "blue", "opacity"};
  return kNames[static_cast<int>(f)];
}

bool is_geometry_field(StrokeField f) { return static_cast<int>(f) <= static_cast<int>(StrokeField::kThickness); }

double wrap_angle(double theta) {
  double w = theta - 2.0 * pi * std::floor((theta + pi) / (2.0 * pi));
  // Rounding can land exactly on +pi.
  if (w >= pi) w -= 2.0 * pi;
  if (w < -pi) w = -pi;
  return w;
}

bool within_limits(const StrokeParams& s) {
  using namespace stroke_limits;
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  return in(s.x, 0, 1) && in(s.y, 0, 1) && s.orientation >= -pi && s.orientation < pi &&
         in(s.length, kLengthMin, kLengthMax) && in(s.bend, kBendMin, kBendMax) &&
         in(s.thickness, kThicknessMin, kThicknessMax) && in(s.color[0], 0, 1) &&
         in(s.color[1], 0, 1) && in(s.color[2], 0, 1) && in(s.opacity, 0, 1);
}

void project(StrokeParams& s) {
  using namespace stroke_limits;
  s.x = std::clamp(s.x, 0.0, 1.0);
  s.y = std::clamp(s.y, 0.0, 1.0);
  s.orientation = wrap_angle(s.orientation);
  s.length = std::clamp(s.length, kLengthMin, kLengthMax);
  s.bend = std::clamp(s.bend, kBendMin, kBendMax);
  s.thickness = std::clamp(s.thickness, kThicknessMin, kThicknessMax);
  for (double& c : s.color) c = std::clamp(c, 0.0, 1.0);
  s.opacity = std::clamp(s.opacity, 0.0, 1.0);
}

double PaintingPlan::diagonal_px() const {
  return std::hypot(static_cast<double>(canvas_width_px), static_cast<double>(canvas_height_px));
}

void PaintingPlan::validate() const {
  if (canvas_width_px < 1 || canvas_height_px < 1) {
    throw ParameterError("plan canvas dimensions must be >= 1");
  }
  if (!(softness > 0.0) || !std::isfinite(softness)) {
    throw ParameterError("plan softness must be > 0");
  }
}

PlanGradient PlanGradient::zeros(std::size_t n_strokes) {
  PlanGradient g;
  StrokeParams zero{0, 0, 0, 0, 0, 0, {0, 0, 0}, 0};
  g.strokes.assign(n_strokes, zero);
  return g;
}

PlanGradient& PlanGradient::operator+=(const PlanGradient& other) {
  add_scaled(other, 1.0);
  return *this;
}

void PlanGradient::add_scaled(const PlanGradient& other, double scale) {
  if (other.strokes.size() != strokes.size()) {
    throw ParameterError("plan gradient stroke count mismatch");
  }
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    for (int f = 0; f < kStrokeFieldCount; ++f) {
      field(strokes[i], StrokeField(f)) += scale * field(other.strokes[i], StrokeField(f));
    }
  }
  for (int c = 0; c < 3; ++c) background[c] += scale * other.background[c];
}

std::vector<double> flatten(const PaintingPlan& plan) {
  std::vector<double> out;
  out.reserve(plan.strokes.size() * kStrokeFieldCount + 3);
  for (const auto& s : plan.strokes) {
    for (int f = 0; f < kStrokeFieldCount; ++f) out.push_back(field(s, StrokeField(f)));
  }
  out.insert(out.end(), plan.background.begin(), plan.background.end());
  return out;
}

void unflatten(std::span<const double> values, PaintingPlan& plan) {
  if (values.size() != plan.strokes.size() * kStrokeFieldCount + 3) {
    throw ParameterError("unflatten: parameter vector length mismatch");
  }
  std::size_t i = 0;
  for (auto& s : plan.strokes) {
    for (int f = 0; f < kStrokeFieldCount; ++f) field(s, StrokeField(f)) = values[i++];
  }
  for (int c = 0; c < 3; ++c) plan.background[c] = values[i++];
}

std::vector<double> flatten(const PlanGradient& grad) {
  std::vector<double> out;
  out.reserve(grad.strokes.size() * kStrokeFieldCount + 3);
  for (const auto& s : grad.strokes) {
    for (int f = 0; f < kStrokeFieldCount; ++f) out.push_back(field(s, StrokeField(f)));
  }
  out.insert(out.end(), grad.background.begin(), grad.background.end());
  return out;
}

Point2 QuadBezier::eval(double t) const {
  const double u = 1.0 - t;
  const double w0 = u * u, w1 = 2.0 * t * u, w2 = t * t;
  return {w0 * p0[0] + w1 * p1[0] + w2 * p2[0], w0 * p0[1] + w1 * p1[1] + w2 * p2[1]};
}

QuadBezier stroke_geometry(const StrokeParams& s, int width_px, int height_px) {
  const double diag = std::hypot(static_cast<double>(width_px), static_cast<double>(height_px));
  const double len = s.length * diag;
  const double bend = s.bend * diag;
  const double c = std::cos(s.orientation), sn = std::sin(s.orientation);
  const Point2 p0{s.x * width_px, s.y * height_px};
  auto local = [&](double lx, double ly) -> Point2 {
    return {p0[0] + c * lx - sn * ly, p0[1] + sn * lx + c * ly};
  };
  return {p0, local(0.5 * len, bend), local(len, 0.0)};
}

namespace {

double dot(const Point2& a, const Point2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// B(t) = p0 + 2t a + t^2 b with a = P1 - P0, b = P2 - 2 P1 + P0.
struct BezierCoeffs {
  Point2 p0, a, b;
  double aa, ab, bb;

  explicit BezierCoeffs(const QuadBezier& q)
      : p0(q.p0),
        a{q.p1[0] - q.p0[0], q.p1[1] - q.p0[1]},
        b{q.p2[0] - 2.0 * q.p1[0] + q.p0[0], q.p2[1] - 2.0 * q.p1[1] + q.p0[1]},
        aa(dot(a, a)),
        ab(dot(a, b)),
        bb(dot(b, b)) {}

  Point2 eval(double t) const {
    return {p0[0] + t * (2.0 * a[0] + t * b[0]), p0[1] + t * (2.0 * a[1] + t * b[1])};
  }
};

/// Real roots of A t^2 + B t + C strictly inside (0, 1), ascending.
int interior_quadratic_roots(double qa, double qb, double qc, double out[2]) {
  int n = 0;
  auto keep = [&](double r) {
    if (r > 0.0 && r < 1.0) out[n++] = r;
  };
  if (qa == 0.0) {
    if (qb != 0.0) keep(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
      keep(q / qa);
      if (q != 0.0) keep(qc / q);
    }
  }
  if (n == 2 && out[0] > out[1]) std::swap(out[0], out[1]);
  return n;
}

NearestPoint nearest(const BezierCoeffs& k, const Point2& p) {
  const Point2 d{k.p0[0] - p[0], k.p0[1] - p[1]};
  // g(t) = (B(t) - p) . B'(t) / 2
  const double c3 = k.bb, c2 = 3.0 * k.ab, c1 = 2.0 * k.aa + dot(d, k.b), c0 = dot(d, k.a);
  auto g = [&](double t) { return ((c3 * t + c2) * t + c1) * t + c0; };
  auto dg = [&](double t) { return (3.0 * c3 * t + 2.0 * c2) * t + c1; };

  double candidates[5] = {0.0, 1.0};
  int n_candidates = 2;

  double breaks[4] = {0.0};
  double crit[2];
  const int n_crit = interior_quadratic_roots(3.0 * c3, 2.0 * c2, c1, crit);
  int n_breaks = 1;
  for (int i = 0; i < n_crit; ++i) breaks[n_breaks++] = crit[i];
  breaks[n_breaks++] = 1.0;

  for (int i = 0; i + 1 < n_breaks; ++i) {
    double lo = breaks[i], hi = breaks[i + 1];
    double glo = g(lo);
    const double ghi = g(hi);
    if (glo == 0.0) {
      candidates[n_candidates++] = lo;
      continue;
    }
    if ((glo < 0.0) == (ghi < 0.0)) continue;
    // Safeguarded Newton on a bracketing interval.
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 80; ++iter) {
      const double gt = g(t);
      if (gt == 0.0) break;
      if ((gt < 0.0) == (glo < 0.0)) {
        lo = t;
        glo = gt;
      } else {
        hi = t;
      }
      const double slope = dg(t);
      double next = slope != 0.0 ? t - gt / slope : lo - 1.0;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) <= 1e-16 || hi - lo <= 1e-16) {
        t = next;
        break;
      }
      t = next;
    }
    candidates[n_candidates++] = t;
  }

  NearestPoint best{0.0, 0.0, k.p0};
  double best_sq = INFINITY;
  for (int i = 0; i < n_candidates; ++i) {
    const Point2 q = k.eval(candidates[i]);
    const double dx = q[0] - p[0], dy = q[1] - p[1];
    const double sq = dx * dx + dy * dy;
    if (sq < best_sq) {
      best_sq = sq;
      best = {candidates[i], 0.0, q};
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

double segment_distance(const Point2& a, const Point2& b, const Point2& p) {
  const Point2 ab{b[0] - a[0], b[1] - a[1]};
  const Point2 ap{p[0] - a[0], p[1] - a[1]};
  const double len_sq = dot(ab, ab);
  const double t = len_sq > 0.0 ? std::clamp(dot(ap, ab) / len_sq, 0.0, 1.0) : 0.0;
  return std::hypot(ap[0] - t * ab[0], ap[1] - t * ab[1]);
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Coverage below sigmoid(-40) ~ 4e-18 is treated as exactly zero; it bounds
// the pixel rectangle each stroke is evaluated on.
constexpr double kCoverageCutoff = 40.0;
constexpr int kBlockRows = 4;

/// Per-stroke quantities shared by every pixel.
struct StrokeRaster {
  BezierCoeffs coeffs;
  double half_width_px;
  double opacity;
  Rgb color;
  int x_min, x_max, y_min, y_max;  // inclusive pixel range, may be empty
  // Partial derivatives of P1 and P2 w.r.t. orientation, length and bend.
  Point2 dp1_dtheta, dp2_dtheta, dp1_dlen, dp2_dlen, dp1_dbend;

  StrokeRaster(const StrokeParams& s, const PaintingPlan& plan)
      : coeffs(stroke_geometry(s, plan.canvas_width_px, plan.canvas_height_px)) {
    const double diag = plan.diagonal_px();
    const double sigma = plan.softness * diag;
    half_width_px = s.thickness * diag;
    opacity = s.opacity;
    color = s.color;
    const QuadBezier q = stroke_geometry(s, plan.canvas_width_px, plan.canvas_height_px);
    const double reach = half_width_px + kCoverageCutoff * sigma;
    const double lo_x = std::min({q.p0[0], q.p1[0], q.p2[0]}) - reach;
    const double hi_x = std::max({q.p0[0], q.p1[0], q.p2[0]}) + reach;
    const double lo_y = std::min({q.p0[1], q.p1[1], q.p2[1]}) - reach;
    const double hi_y = std::max({q.p0[1], q.p1[1], q.p2[1]}) + reach;
    // Pixel centers sit at i + 0.5.
    auto first = [](double lo) { return static_cast<int>(std::max(-1.0, std::ceil(lo - 0.5))); };
    auto last = [](double hi, int n) {
      return static_cast<int>(std::min(static_cast<double>(n), std::floor(hi - 0.5)));
    };
    x_min = std::max(0, first(lo_x));
    x_max = std::min(plan.canvas_width_px - 1, last(hi_x, plan.canvas_width_px));
    y_min = std::max(0, first(lo_y));
    y_max = std::min(plan.canvas_height_px - 1, last(hi_y, plan.canvas_height_px));

    const double c = std::cos(s.orientation), sn = std::sin(s.orientation);
    const double len = s.length * diag, bend = s.bend * diag;
    // d/dtheta of R(theta) (lx, ly) = (-sin lx - cos ly, cos lx - sin ly)
    dp1_dtheta = {-sn * 0.5 * len - c * bend, c * 0.5 * len - sn * bend};
    dp2_dtheta = {-sn * len, c * len};
    dp1_dlen = {c * 0.5 * diag, sn * 0.5 * diag};
    dp2_dlen = {c * diag, sn * diag};
    dp1_dbend = {-sn * diag, c * diag};
  }

  bool covers(int x, int y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
};

std::vector<StrokeRaster> rasterize_setup(const PaintingPlan& plan) {
  std::vector<StrokeRaster> out;
  out.reserve(plan.strokes.size());
  for (const auto& s : plan.strokes) out.emplace_back(s, plan);
  return out;
}

Rgb clamp_unit(Rgb v) {
  for (double& c : v) c = std::clamp(c, 0.0, 1.0);
  return v;
}

}  // namespace

NearestPoint nearest_point(const QuadBezier& curve, const Point2& p) {
  return nearest(BezierCoeffs(curve), p);
}

double polyline_distance(const QuadBezier& curve, const Point2& p, int segments) {
  if (segments < 1) throw ParameterError("polyline_distance: segments must be >= 1");
  double best = INFINITY;
  Point2 prev = curve.p0;
  for (int i = 1; i <= segments; ++i) {
    const Point2 next = curve.eval(static_cast<double>(i) / segments);
    best = std::min(best, segment_distance(prev, next, p));
    prev = next;
  }
  return best;
}

CanvasImage render_plan(const PaintingPlan& plan) {
  plan.validate();
  const auto rasters = rasterize_setup(plan);
  const double sigma = plan.softness * plan.diagonal_px();
  CanvasImage out(plan.canvas_width_px, plan.canvas_height_px);
  const int height = plan.canvas_height_px, width = plan.canvas_width_px;
  const std::size_t blocks = (height + kBlockRows - 1) / kBlockRows;
  parallel_for(blocks, [&](std::size_t block) {
    const int y_end = std::min<int>(height, (block + 1) * kBlockRows);
    for (int y = static_cast<int>(block) * kBlockRows; y < y_end; ++y) {
      for (int x = 0; x < width; ++x) {
        const Point2 center{x + 0.5, y + 0.5};
        Rgb canvas = plan.background;
        for (const auto& r : rasters) {
          if (!r.covers(x, y)) continue;
          const NearestPoint np = nearest(r.coeffs, center);
          const double alpha = r.opacity * stable_sigmoid((r.half_width_px - np.distance) / sigma);
          for (int c = 0; c < 3; ++c) canvas[c] = (1.0 - alpha) * canvas[c] + alpha * r.color[c];
        }
        out.set_pixel(x, y, clamp_unit(canvas));
      }
    }
  });
  return out;
}

PlanGradient render_plan_vjp(const PaintingPlan& plan, const Image& upstream) {
  plan.validate();
  if (upstream.width() != plan.canvas_width_px || upstream.height() != plan.canvas_height_px) {
    throw ParameterError("render_plan_vjp: upstream is " + std::to_string(upstream.width()) + "x" +
                         std::to_string(upstream.height()) + ", canvas is " +
                         std::to_string(plan.canvas_width_px) + "x" +
                         std::to_string(plan.canvas_height_px));
  }
  const auto rasters = rasterize_setup(plan);
  const double diag = plan.diagonal_px();
  const double sigma = plan.softness * diag;
  const int height = plan.canvas_height_px, width = plan.canvas_width_px;
  const double width_d = width, height_d = height;
  const std::size_t n = plan.strokes.size();
  const std::size_t blocks = (height + kBlockRows - 1) / kBlockRows;
  std::vector<PlanGradient> partial(blocks, PlanGradient::zeros(n));

  struct Layer {
    std::size_t stroke;
    double alpha, sig;
    NearestPoint np;
    Rgb before;
  };

  parallel_for(blocks, [&](std::size_t block) {
    PlanGradient& acc = partial[block];
    std::vector<Layer> layers;
    layers.reserve(n);
    const int y_end = std::min<int>(height, (block + 1) * kBlockRows);
    for (int y = static_cast<int>(block) * kBlockRows; y < y_end; ++y) {
      for (int x = 0; x < width; ++x) {
        Rgb g = upstream.pixel(x, y);
        if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) continue;
        const Point2 center{x + 0.5, y + 0.5};
        layers.clear();
        Rgb canvas = plan.background;
        for (std::size_t k = 0; k < n; ++k) {
          const auto& r = rasters[k];
          if (!r.covers(x, y)) continue;
          const NearestPoint np = nearest(r.coeffs, center);
          const double sig = stable_sigmoid((r.half_width_px - np.distance) / sigma);
          const double alpha = r.opacity * sig;
          layers.push_back({k, alpha, sig, np, canvas});
          for (int c = 0; c < 3; ++c) canvas[c] = (1.0 - alpha) * canvas[c] + alpha * r.color[c];
        }
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
          const auto& r = rasters[it->stroke];
          StrokeParams& gs = acc.strokes[it->stroke];
          double d_alpha = 0.0;
          for (int c = 0; c < 3; ++c) {
            gs.color[c] += it->alpha * g[c];
            d_alpha += g[c] * (r.color[c] - it->before[c]);
            g[c] *= 1.0 - it->alpha;
          }
          gs.opacity += d_alpha * it->sig;
          // z = (T - d) / sigma
          const double d_z = d_alpha * r.opacity * it->sig * (1.0 - it->sig);
          gs.thickness += d_z * diag / sigma;
          const double d_dist = -d_z / sigma;
          const double dist = it->np.distance;
          if (dist <= 1e-12 || d_dist == 0.0) continue;
          const double t = it->np.t;
          const Point2 unit{(it->np.point[0] - center[0]) / dist,
                            (it->np.point[1] - center[1]) / dist};
          const double w1 = 2.0 * t * (1.0 - t), w2 = t * t;
          // P0 moves with (x W, y H); the Bernstein weights sum to one.
          gs.x += d_dist * unit[0] * width_d;
          gs.y += d_dist * unit[1] * height_d;
          gs.orientation += d_dist * (w1 * dot(unit, r.dp1_dtheta) + w2 * dot(unit, r.dp2_dtheta));
          gs.length += d_dist * (w1 * dot(unit, r.dp1_dlen) + w2 * dot(unit, r.dp2_dlen));
          gs.bend += d_dist * w1 * dot(unit, r.dp1_dbend);
        }
        for (int c = 0; c < 3; ++c) acc.background[c] += g[c];
      }
    }
  });

  PlanGradient total = PlanGradient::zeros(n);
  for (const auto& p : partial) total += p;
  return total;
}

PaintingPlan init_plan(InitStrategy strategy, int n_strokes, const CanvasConfig& canvas,
                       const std::optional<CanvasImage>& target, std::uint64_t seed) {
  using namespace stroke_limits;
  if (n_strokes < 1) throw ParameterError("init_plan: n_strokes must be >= 1");
  if (strategy == InitStrategy::kImageSeeded && (!target || target->empty())) {
    throw ParameterError("init_plan: image-seeded strategy requires a target image");
  }
  PaintingPlan plan;
  plan.canvas_width_px = canvas.width_px;
  plan.canvas_height_px = canvas.height_px;
  plan.background = canvas.background;
  plan.softness = canvas.softness;
  plan.validate();

  Rng rng(seed);
  plan.strokes.reserve(static_cast<std::size_t>(n_strokes));
  for (int i = 0; i < n_strokes; ++i) {
    StrokeParams s;
    s.x = rng.uniform();
    s.y = rng.uniform();
    s.orientation = rng.uniform(-pi, pi);
    s.length = rng.uniform(kLengthMin, kLengthMax);
    s.bend = rng.uniform(kBendMin, kBendMax);
    s.thickness = rng.uniform(kThicknessMin, kThicknessMax);
    for (double& c : s.color) c = rng.uniform();
    s.opacity = rng.uniform();
    if (strategy == InitStrategy::kImageSeeded) {
      s.color = clamp_unit(
          sample_bilinear(*target, s.x * target->width() - 0.5, s.y * target->height() - 0.5));
    }
    plan.strokes.push_back(s);
  }
  return plan;
}

}  // namespace synesthesia
