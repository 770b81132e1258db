#include "synesthesia/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "synesthesia/canvas.hpp"
#include "synesthesia/emotion.hpp"
#include "synesthesia/encoders.hpp"
#include "synesthesia/objective.hpp"
#include "synesthesia/rng.hpp"

namespace synesthesia {

namespace {

constexpr double kTolerance = 1e-3;
constexpr double kChainedTolerance = 1e-2;
constexpr int kPixelProbes = 20;

Image random_image(Rng& rng, int w, int h) {
  Image img(w, h);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

double central_difference(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

struct Tracker {
  ComponentReport report;
  double scale = 1.0;

  void check(double analytic, double numeric) {
    report.max_relative_error =
        std::max(report.max_relative_error, relative_error(analytic * scale, numeric));
    ++report.checks;
  }
};

Tracker make_tracker(const std::string& name, double tol, const GradcheckOptions& opt) {
  Tracker t;
  t.report.name = name;
  t.report.tolerance = tol;
  if (opt.corrupt_component == name || opt.corrupt_component == "all") t.scale = 1.05;
  return t;
}

FeatureStack random_features(Rng& rng, std::size_t frames) {
  FeatureStack fs;
  fs.mel = Matrix(frames, audio_params::kMelBands);
  fs.mfcc = Matrix(frames, audio_params::kMfccCount);
  fs.chroma = Matrix(frames, audio_params::kChromaClasses);
  for (double& v : fs.mel.data) v = rng.uniform(-23.0, 5.0);
  for (double& v : fs.mfcc.data) v = rng.normal();
  for (double& v : fs.chroma.data) v = rng.uniform();
  return fs;
}

/// Picks a (stroke, field) pair or background channel as a flat index.
double& flat_param(PaintingPlan& plan, std::size_t index) {
  const std::size_t n = plan.strokes.size() * kStrokeFieldCount;
  if (index < n) {
    return field(plan.strokes[index / kStrokeFieldCount], StrokeField(int(index % kStrokeFieldCount)));
  }
  return plan.background[index - n];
}

double flat_grad(const PlanGradient& g, std::size_t index) {
  return flatten(g)[index];
}

void check_render(Tracker& t, std::uint64_t seed, double eps) {
  const PaintingPlan plan = random_gradcheck_plan(seed);
  Rng rng(mix_seed(seed, 101));
  Image upstream(plan.canvas_width_px, plan.canvas_height_px);
  for (double& v : upstream.data()) v = rng.uniform(-1.0, 1.0);
  const auto analytic = flatten(render_plan_vjp(plan, upstream));
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    auto f = [&](double value) {
      PaintingPlan p = plan;
      flat_param(p, i) = value;
      const CanvasImage img = render_plan(p);
      double s = 0.0;
      const std::span<const double> a = img.data(), u = upstream.data();
      for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * u[k];
      return s;
    };
    PaintingPlan p = plan;
    t.check(analytic[i], central_difference(f, flat_param(p, i), eps));
  }
}

void check_augment(Tracker& t, std::uint64_t seed, double eps) {
  Rng rng(mix_seed(seed, 102));
  const int w = 24 + static_cast<int>(rng.uniform() * 16), h = 24 + static_cast<int>(rng.uniform() * 16);
  const Image img = random_image(rng, w, h);
  AugmentationSpec spec;
  spec.count = 3;
  spec.output_size_px = 16;
  spec.min_crop_fraction = 0.5;
  spec.max_corner_jitter_fraction = 0.1;
  spec.seed = rng.next();
  const auto views = augment_views(img, spec);
  std::vector<Image> upstream;
  for (const auto& v : views) upstream.push_back(random_image(rng, v.width(), v.height()));
  const ImageGradient analytic = augment_views_vjp(w, h, spec, upstream);
  for (int probe = 0; probe < kPixelProbes; ++probe) {
    const std::size_t idx = rng.next() % img.data().size();
    auto f = [&](double value) {
      Image p = img;
      p.data()[idx] = value;
      double s = 0.0;
      const auto vs = augment_views(p, spec);
      for (std::size_t k = 0; k < vs.size(); ++k) {
        const std::span<const double> a = vs[k].data(), u = upstream[k].data();
        for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * u[j];
      }
      return s;
    };
    t.check(analytic.data()[idx], central_difference(f, img.data()[idx], eps));
  }
}

void check_encoder(Tracker& t, std::uint64_t seed, double eps) {
  Rng rng(mix_seed(seed, 103));
  const int w = 16 + static_cast<int>(rng.uniform() * 32), h = 16 + static_cast<int>(rng.uniform() * 32);
  const Image img = random_image(rng, w, h);
  const ProjectionImageEncoder encoder(kDefaultEmbeddingDim, rng.next());
  std::vector<double> upstream(encoder.dim());
  for (double& v : upstream) v = rng.normal();
  const ImageGradient analytic = encoder.vjp(img, upstream);
  for (int probe = 0; probe < kPixelProbes; ++probe) {
    const std::size_t idx = rng.next() % img.data().size();
    auto f = [&](double value) {
      Image p = img;
      p.data()[idx] = value;
      const Embedding e = encoder.encode(p);
      double s = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) s += e[k] * upstream[k];
      return s;
    };
    t.check(analytic.data()[idx], central_difference(f, img.data()[idx], eps));
  }
}

void check_image_emotion(Tracker& t, std::uint64_t seed, double eps) {
  Rng rng(mix_seed(seed, 104));
  const int w = 16 + static_cast<int>(rng.uniform() * 32), h = 16 + static_cast<int>(rng.uniform() * 32);
  const Image img = random_image(rng, w, h);
  const std::uint64_t enc_seed = rng.next();
  const ProjectionImageEncoder encoder(kDefaultEmbeddingDim, enc_seed);
  const EmotionHead head = EmotionHead::random(kDefaultEmbeddingDim, enc_seed);
  const int cls = static_cast<int>(rng.next() % kEmotionCount);
  EmotionDistribution upstream{};
  upstream[cls] = 1.0;
  const ImageGradient analytic = image_emotion_vjp(img, encoder, head, upstream);
  for (int probe = 0; probe < kPixelProbes; ++probe) {
    const std::size_t idx = rng.next() % img.data().size();
    auto f = [&](double value) {
      Image p = img;
      p.data()[idx] = value;
      return image_emotion(p, encoder, head)[cls];
    };
    t.check(analytic.data()[idx], central_difference(f, img.data()[idx], eps));
  }
}

void check_pixel_l2(Tracker& t, std::uint64_t seed, double eps) {
  const PaintingPlan plan = random_gradcheck_plan(seed);
  Rng rng(mix_seed(seed, 105));
  const Image target = random_image(rng, plan.canvas_width_px, plan.canvas_height_px);
  const auto analytic = flatten(loss_pixel_l2(plan, target).gradient);
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    auto f = [&](double value) {
      PaintingPlan p = plan;
      flat_param(p, i) = value;
      return pixel_l2_image_loss(render_plan(p), target).value;
    };
    PaintingPlan p = plan;
    t.check(analytic[i], central_difference(f, flat_param(p, i), eps));
  }
}

void check_natural_sound(Tracker& t, std::uint64_t seed, double eps) {
  const PaintingPlan plan = random_gradcheck_plan(seed);
  Rng rng(mix_seed(seed, 106));
  const FeatureStack features = random_features(rng, 6);
  const std::uint64_t enc_seed = rng.next();
  constexpr std::size_t kDim = 64;
  EncoderSet encoders{std::make_shared<ProjectionImageEncoder>(kDim, enc_seed),
                      std::make_shared<ProjectionAudioEncoder>(kDim, enc_seed), nullptr,
                      EmotionHead::zeros(kDim)};
  AugmentationSpec aug;
  aug.count = 2;
  aug.output_size_px = 16;
  aug.seed = rng.next();
  const LossValue analytic = loss_natural_sound(plan, features, encoders, aug);
  const std::size_t n_params = plan.strokes.size() * kStrokeFieldCount + 3;
  for (int probe = 0; probe < 5; ++probe) {
    const std::size_t i = rng.next() % n_params;
    auto f = [&](double value) {
      PaintingPlan p = plan;
      flat_param(p, i) = value;
      return loss_natural_sound(p, features, encoders, aug).value;
    };
    PaintingPlan p = plan;
    t.check(flat_grad(analytic.gradient, i), central_difference(f, flat_param(p, i), eps));
  }
}

/// Coverage is not twice differentiable everywhere: distance has a cone point
/// on the centerline, and its second derivative jumps across the lines normal
/// to the curve at either endpoint, where the nearest point moves from the
/// body onto the round cap. A central difference that straddles one of these
/// sets is off by O(epsilon) instead of O(epsilon^2), so strokes with a
/// covered pixel center too close to either set are redrawn. The seam lines
/// pivot about the endpoints when P1 moves, hence a margin growing with the
/// distance along the seam. Sized for steps up to 1e-4.
bool clear_of_seams(const StrokeParams& s, const PaintingPlan& plan) {
  constexpr double kConeMarginPx = 0.02, kSeamMarginPx = 0.01, kStep = 1e-4;
  const double diag = plan.diagonal_px();
  const double reach = s.thickness * diag + 10.0 * plan.softness * diag;
  const QuadBezier c = stroke_geometry(s, plan.canvas_width_px, plan.canvas_height_px);
  const Point2 t0{c.p1[0] - c.p0[0], c.p1[1] - c.p0[1]};
  const Point2 t1{c.p2[0] - c.p1[0], c.p2[1] - c.p1[1]};
  const double n0 = std::hypot(t0[0], t0[1]), n1 = std::hypot(t1[0], t1[1]);
  // Largest seam rotation per step: P1 moves by up to step * diag.
  const double pivot0 = 2.0 * kStep * diag / n0, pivot1 = 2.0 * kStep * diag / n1;
  for (int y = 0; y < plan.canvas_height_px; ++y) {
    for (int x = 0; x < plan.canvas_width_px; ++x) {
      const Point2 p{x + 0.5, y + 0.5};
      const double d = nearest_point(c, p).distance;
      if (d < kConeMarginPx) return false;
      if (d > reach) continue;
      const Point2 r0{p[0] - c.p0[0], p[1] - c.p0[1]}, r1{p[0] - c.p2[0], p[1] - c.p2[1]};
      const double s0 = (r0[0] * t0[0] + r0[1] * t0[1]) / n0;
      const double s1 = (r1[0] * t1[0] + r1[1] * t1[1]) / n1;
      const double along0 = std::abs(r0[0] * t0[1] - r0[1] * t0[0]) / n0;
      const double along1 = std::abs(r1[0] * t1[1] - r1[1] * t1[0]) / n1;
      if (std::abs(s0) < kSeamMarginPx + pivot0 * along0) return false;
      if (std::abs(s1) < kSeamMarginPx + pivot1 * along1) return false;
    }
  }
  return true;
}

}  // namespace

bool GradcheckReport::all_passed() const {
  return std::ranges::all_of(components, [](const ComponentReport& c) { return c.passed; });
}

const std::vector<std::string>& gradcheck_components() {
  static const std::vector<std::string> names = {"render_plan",   "augment_views",
                                                 "encode_image",  "image_emotion",
                                                 "loss_pixel_l2", "loss_natural_sound"};
  return names;
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

PaintingPlan random_gradcheck_plan(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 100));
  PaintingPlan plan;
  plan.canvas_width_px = 32 + static_cast<int>(rng.uniform() * 17);
  plan.canvas_height_px = 32 + static_cast<int>(rng.uniform() * 17);
  plan.softness = rng.uniform(0.035, 0.045);
  for (double& c : plan.background) c = rng.uniform(0.05, 0.95);
  const int n = 1 + static_cast<int>(rng.uniform() * 3);
  while (static_cast<int>(plan.strokes.size()) < n) {
    StrokeParams s;
    s.x = rng.uniform(0.2, 0.8);
    s.y = rng.uniform(0.2, 0.8);
    s.orientation = rng.uniform(-std::numbers::pi, std::numbers::pi);
    s.length = rng.uniform(0.2, 0.4);
    s.bend = rng.uniform(-0.015, 0.015);
    s.thickness = rng.uniform(0.25, 0.3);
    for (double& c : s.color) c = rng.uniform(0.05, 0.95);
    s.opacity = rng.uniform(0.3, 1.0);
    if (clear_of_seams(s, plan)) {
      plan.strokes.push_back(s);
    }
  }
  return plan;
}

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  using Check = void (*)(Tracker&, std::uint64_t, double);
  const std::vector<std::pair<Check, double>> checks = {
      {check_render, kTolerance},      {check_augment, kTolerance},
      {check_encoder, kTolerance},     {check_image_emotion, kTolerance},
      {check_pixel_l2, kTolerance},    {check_natural_sound, kChainedTolerance}};
  GradcheckReport report;
  const auto& names = gradcheck_components();
  for (std::size_t c = 0; c < checks.size(); ++c) {
    Tracker t = make_tracker(names[c], checks[c].second, opt);
    for (int k = 0; k < opt.configs; ++k) {
      checks[c].first(t, mix_seed(opt.seed, std::uint64_t(k)), opt.epsilon);
    }
    t.report.passed = t.report.max_relative_error < t.report.tolerance;
    report.components.push_back(t.report);
  }
  return report;
}

}  // namespace synesthesia
