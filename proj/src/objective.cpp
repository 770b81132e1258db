#include "synesthesia/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "synesthesia/adam.hpp"
#include "synesthesia/error.hpp"
#include "synesthesia/rng.hpp"

namespace synesthesia {

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ParameterError("cosine_distance: dimension mismatch");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (!(uu > 0.0) || !(vv > 0.0)) throw NumericError("cosine_distance of a zero vector");
  return 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
}

std::vector<double> cosine_distance_grad(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ParameterError("cosine_distance: dimension mismatch");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (!(uu > 0.0) || !(vv > 0.0)) throw NumericError("cosine_distance of a zero vector");
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  // d/du [-(u.v)/(|u||v|)] = -v/(|u||v|) + (u.v) u / (|u|^3 |v|)
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    g[i] = -v[i] / (nu * nv) + uv * u[i] / (uu * nu * nv);
  }
  return g;
}

EncoderSet EncoderSet::reference(std::uint64_t seed, std::size_t dim) {
  return {reference_image_encoder(seed, dim), reference_audio_encoder(seed, dim),
          reference_text_encoder(seed, dim), EmotionHead::random(dim, seed)};
}

const char* term_name(TermKind kind) {
  switch (kind) {
    case TermKind::kNaturalSound: return "natural_sound";
    case TermKind::kSpeechText: return "speech_text";
    case TermKind::kSpeechEmotion: return "speech_emotion";
    case TermKind::kPixelL2: return "pixel_l2";
    case TermKind::kDirectEmotion: return "direct_emotion";
  }
  return "?";
}

ObjectiveTerm ObjectiveTerm::natural_sound(FeatureStack features, double weight) {
  return {TermKind::kNaturalSound, weight, std::move(features)};
}
ObjectiveTerm ObjectiveTerm::speech_text(std::string transcript, double weight) {
  return {TermKind::kSpeechText, weight, std::move(transcript)};
}
ObjectiveTerm ObjectiveTerm::speech_emotion(EmotionDistribution e_speech, double weight) {
  return {TermKind::kSpeechEmotion, weight, e_speech};
}
ObjectiveTerm ObjectiveTerm::pixel_l2(CanvasImage target, double weight) {
  return {TermKind::kPixelL2, weight, std::move(target)};
}
ObjectiveTerm ObjectiveTerm::direct_emotion(EmotionDistribution target, double weight) {
  return {TermKind::kDirectEmotion, weight, target};
}

void ObjectiveSpec::validate() const {
  bool any_positive = false;
  for (const auto& term : terms) {
    if (!std::isfinite(term.weight) || term.weight < 0.0) {
      throw ParameterError(std::string("term ") + term_name(term.kind) +
                           " has an invalid weight (must be finite and >= 0)");
    }
    any_positive = any_positive || term.weight > 0.0;
    bool ok = false;
    switch (term.kind) {
      case TermKind::kNaturalSound: ok = std::holds_alternative<FeatureStack>(term.payload); break;
      case TermKind::kSpeechText: ok = std::holds_alternative<std::string>(term.payload); break;
      case TermKind::kSpeechEmotion:
      case TermKind::kDirectEmotion:
        ok = std::holds_alternative<EmotionDistribution>(term.payload);
        break;
      case TermKind::kPixelL2: ok = std::holds_alternative<CanvasImage>(term.payload); break;
    }
    if (!ok) throw ParameterError(std::string("term ") + term_name(term.kind) + " has the wrong payload");
  }
  if (!any_positive) throw ParameterError("objective needs at least one term with weight > 0");
  augmentation.validate();
}

AugmentationSpec augmentation_for(const ObjectiveSpec& spec, std::uint64_t salt) {
  AugmentationSpec aug = spec.augmentation;
  aug.seed = mix_seed(mix_seed(spec.augmentation.seed, spec.seed), salt);
  return aug;
}

ImageLoss embedding_view_loss(const CanvasImage& img, std::span<const double> target,
                              const ImageEncoder& encoder, const AugmentationSpec& augmentation) {
  const auto views = augment_views(img, augmentation);
  const double inv_views = 1.0 / static_cast<double>(views.size());
  ImageLoss out;
  std::vector<Image> view_grads;
  view_grads.reserve(views.size());
  for (const auto& view : views) {
    const Embedding e = encoder.encode(view);
    out.value += cosine_distance(e, target) * inv_views;
    auto g = cosine_distance_grad(e, target);
    for (double& v : g) v *= inv_views;
    view_grads.push_back(encoder.vjp(view, g));
  }
  out.gradient = augment_views_vjp(img.width(), img.height(), augmentation, view_grads);
  return out;
}

ImageLoss emotion_image_loss(const CanvasImage& img, const EmotionDistribution& target,
                             const ImageEncoder& encoder, const EmotionHead& head) {
  const EmotionDistribution predicted = image_emotion(img, encoder, head);
  ImageLoss out;
  out.value = cosine_distance(target, predicted);
  const auto g = cosine_distance_grad(predicted, target);
  EmotionDistribution upstream{};
  std::copy(g.begin(), g.end(), upstream.begin());
  out.gradient = image_emotion_vjp(img, encoder, head, upstream);
  return out;
}

ImageLoss pixel_l2_image_loss(const CanvasImage& img, const CanvasImage& target) {
  if (!img.same_shape(target)) {
    throw ParameterError("pixel_l2: target is " + std::to_string(target.width()) + "x" +
                         std::to_string(target.height()) + ", render is " +
                         std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  ImageLoss out{0.0, ImageGradient(img.width(), img.height())};
  const auto a = img.data(), b = target.data();
  auto g = out.gradient.data();
  const double inv_n = 1.0 / static_cast<double>(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
    g[i] = 2.0 * d * inv_n;
  }
  out.value = sum * inv_n;
  return out;
}

namespace {

void check_encoders(const EncoderSet& enc, bool need_audio, bool need_text) {
  if (!enc.image) throw ParameterError("objective: missing image encoder");
  if (need_audio && !enc.audio) throw ParameterError("objective: missing audio encoder");
  if (need_text && !enc.text) throw ParameterError("objective: missing text encoder");
}

ImageLoss evaluate_term(const ObjectiveTerm& term, const CanvasImage& render,
                        const EncoderSet& enc, const AugmentationSpec& aug) {
  switch (term.kind) {
    case TermKind::kNaturalSound: {
      check_encoders(enc, true, false);
      const Embedding f_a = enc.audio->encode(std::get<FeatureStack>(term.payload));
      return embedding_view_loss(render, f_a, *enc.image, aug);
    }
    case TermKind::kSpeechText: {
      check_encoders(enc, false, true);
      const Embedding f_t = enc.text->encode(std::get<std::string>(term.payload));
      return embedding_view_loss(render, f_t, *enc.image, aug);
    }
    case TermKind::kSpeechEmotion:
    case TermKind::kDirectEmotion:
      check_encoders(enc, false, false);
      return emotion_image_loss(render, std::get<EmotionDistribution>(term.payload), *enc.image,
                                enc.emotion_head);
    case TermKind::kPixelL2:
      return pixel_l2_image_loss(render, std::get<CanvasImage>(term.payload));
  }
  throw ParameterError("unknown objective term");
}

}  // namespace

LossValue loss_natural_sound(const PaintingPlan& plan, const FeatureStack& audio_features,
                             const EncoderSet& encoders, const AugmentationSpec& augmentation) {
  check_encoders(encoders, true, false);
  const CanvasImage render = render_plan(plan);
  const Embedding f_a = encoders.audio->encode(audio_features);
  const ImageLoss loss = embedding_view_loss(render, f_a, *encoders.image, augmentation);
  return {loss.value, render_plan_vjp(plan, loss.gradient)};
}

SpeechLoss loss_speech(const PaintingPlan& plan, std::string_view transcript,
                       const EmotionDistribution& e_speech, const EncoderSet& encoders,
                       const AugmentationSpec& augmentation) {
  check_encoders(encoders, false, true);
  const CanvasImage render = render_plan(plan);
  const Embedding f_t = encoders.text->encode(transcript);
  const ImageLoss text = embedding_view_loss(render, f_t, *encoders.image, augmentation);
  const ImageLoss emo = emotion_image_loss(render, e_speech, *encoders.image, encoders.emotion_head);
  ImageGradient g = text.gradient;
  auto gd = g.data();
  const auto ed = emo.gradient.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += ed[i];
  SpeechLoss out;
  out.text_term = text.value;
  out.emotion_term = emo.value;
  out.total = {text.value + emo.value, render_plan_vjp(plan, g)};
  return out;
}

LossValue loss_pixel_l2(const PaintingPlan& plan, const CanvasImage& target) {
  const CanvasImage render = render_plan(plan);
  const ImageLoss loss = pixel_l2_image_loss(render, target);
  return {loss.value, render_plan_vjp(plan, loss.gradient)};
}

CompositeLoss composite_loss(const PaintingPlan& plan, const ObjectiveSpec& spec,
                             std::uint64_t salt) {
  spec.validate();
  const CanvasImage render = render_plan(plan);
  const AugmentationSpec aug = augmentation_for(spec, salt);
  CompositeLoss out;
  ImageGradient pixel_grad(render.width(), render.height());
  auto acc = pixel_grad.data();
  for (const auto& term : spec.terms) {
    if (term.weight == 0.0) {
      out.term_values.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const ImageLoss loss = evaluate_term(term, render, spec.encoders, aug);
    out.term_values.push_back(loss.value);
    out.total += term.weight * loss.value;
    const auto g = loss.gradient.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term.weight * g[i];
  }
  out.gradient = render_plan_vjp(plan, pixel_grad);
  return out;
}

void OptimizerConfig::validate() const {
  if (iterations < 1) throw ParameterError("optimizer iterations must be >= 1");
  if (!(lr_geometry > 0.0) || !(lr_color > 0.0)) {
    throw ParameterError("optimizer learning rates must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw ParameterError("invalid Adam hyperparameters");
  }
}

OptimizationResult optimize(const PaintingPlan& plan0, const ObjectiveSpec& spec,
                            const OptimizerConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  spec.validate();
  plan0.validate();

  PaintingPlan plan = plan0;
  std::vector<double> params = flatten(plan);
  std::vector<double> lrs;
  lrs.reserve(params.size());
  for (std::size_t s = 0; s < plan.strokes.size(); ++s) {
    for (int f = 0; f < kStrokeFieldCount; ++f) {
      lrs.push_back(is_geometry_field(StrokeField(f)) ? cfg.lr_geometry : cfg.lr_color);
    }
  }
  lrs.insert(lrs.end(), 3, cfg.lr_color);

  Adam adam(params.size(), {cfg.beta1, cfg.beta2, cfg.epsilon});
  OptimizationResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  for (int t = 0; t < cfg.iterations; ++t) {
    const CompositeLoss loss = composite_loss(plan, spec, mix_seed(cfg.seed, std::uint64_t(t)));
    const std::vector<double> grad = flatten(loss.gradient);
    if (!std::isfinite(loss.total)) {
      throw NumericError("non-finite loss at iteration " + std::to_string(t));
    }
    for (double g : grad) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient at iteration " + std::to_string(t));
    }
    result.loss_history.push_back(loss.total);
    result.term_history.push_back(loss.term_values);
    if (loss.total < result.best_loss) {
      result.best_loss = loss.total;
      result.best_iteration = static_cast<std::size_t>(t);
      result.best_plan = plan;
    }
    if (on_iteration) on_iteration(t, loss.total);

    adam.step(params, grad, lrs);
    unflatten(params, plan);
    for (auto& s : plan.strokes) project(s);
    for (double& c : plan.background) c = std::clamp(c, 0.0, 1.0);
    params = flatten(plan);
  }
  return result;
}

}  // namespace synesthesia
