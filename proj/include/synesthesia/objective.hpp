#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "synesthesia/audio.hpp"
#include "synesthesia/canvas.hpp"
#include "synesthesia/emotion.hpp"
#include "synesthesia/encoders.hpp"
#include "synesthesia/strokes.hpp"

namespace synesthesia {

/// 1 - u.v / (|u| |v|). Throws NumericError if either vector is zero.
double cosine_distance(std::span<const double> u, std::span<const double> v);
/// Gradient of cosine_distance(u, v) w.r.t. u.
std::vector<double> cosine_distance_grad(std::span<const double> u, std::span<const double> v);

/// The models the objective terms are evaluated with.
struct EncoderSet {
  std::shared_ptr<const ImageEncoder> image;
  std::shared_ptr<const AudioEncoder> audio;
  std::shared_ptr<const TextEncoder> text;
  EmotionHead emotion_head;

  /// Seeded reference encoders and a seeded random emotion head.
  static EncoderSet reference(std::uint64_t seed, std::size_t dim = kDefaultEmbeddingDim);
};

enum class TermKind { kNaturalSound, kSpeechText, kSpeechEmotion, kPixelL2, kDirectEmotion };

const char* term_name(TermKind kind);

using TermPayload = std::variant<FeatureStack, std::string, EmotionDistribution, CanvasImage>;

/// One weighted loss term. Payload by kind: natural_sound -> FeatureStack,
/// speech_text -> transcript, speech_emotion / direct_emotion -> target
/// distribution, pixel_l2 -> target image.
struct ObjectiveTerm {
  TermKind kind;
  double weight = 1.0;
  TermPayload payload;

  static ObjectiveTerm natural_sound(FeatureStack features, double weight = 1.0);
  static ObjectiveTerm speech_text(std::string transcript, double weight = 1.0);
  static ObjectiveTerm speech_emotion(EmotionDistribution e_speech, double weight = 1.0);
  static ObjectiveTerm pixel_l2(CanvasImage target, double weight = 1.0);
  static ObjectiveTerm direct_emotion(EmotionDistribution target, double weight = 1.0);
};

struct ObjectiveSpec {
  std::vector<ObjectiveTerm> terms;
  AugmentationSpec augmentation;
  std::uint64_t seed = 0;
  EncoderSet encoders;

  /// Throws ParameterError unless some weight is > 0, every weight is finite
  /// and >= 0, and each payload matches its kind.
  void validate() const;
};

/// Augmentation used for evaluation number `salt`: the configured spec with
/// its seed replaced by mix(mix(aug.seed, spec.seed), salt).
AugmentationSpec augmentation_for(const ObjectiveSpec& spec, std::uint64_t salt);

struct LossValue {
  double value = 0.0;
  PlanGradient gradient;
};

/// Scalar loss of a rendered image plus its pixel gradient.
struct ImageLoss {
  double value = 0.0;
  ImageGradient gradient;
};

/// Mean cosine distance between every augmented view's embedding and `target`.
ImageLoss embedding_view_loss(const CanvasImage& img, std::span<const double> target,
                              const ImageEncoder& encoder, const AugmentationSpec& augmentation);
/// Cosine distance between `target` and the image's predicted emotion.
ImageLoss emotion_image_loss(const CanvasImage& img, const EmotionDistribution& target,
                             const ImageEncoder& encoder, const EmotionHead& head);
/// Mean squared error over all channels.
ImageLoss pixel_l2_image_loss(const CanvasImage& img, const CanvasImage& target);

/// Natural-sound loss: render, augment, encode, mean cosine distance to the
/// audio embedding (computed once per call).
LossValue loss_natural_sound(const PaintingPlan& plan, const FeatureStack& audio_features,
                             const EncoderSet& encoders, const AugmentationSpec& augmentation);

struct SpeechLoss {
  double text_term = 0.0;
  double emotion_term = 0.0;
  LossValue total;
};

/// Speech loss: transcript-to-views cosine distance plus emotion cosine
/// distance between e_speech and the emotion of the un-augmented render.
SpeechLoss loss_speech(const PaintingPlan& plan, std::string_view transcript,
                       const EmotionDistribution& e_speech, const EncoderSet& encoders,
                       const AugmentationSpec& augmentation);

LossValue loss_pixel_l2(const PaintingPlan& plan, const CanvasImage& target);

struct CompositeLoss {
  double total = 0.0;
  PlanGradient gradient;
  /// Unweighted value per term in spec order; NaN for skipped zero-weight terms.
  std::vector<double> term_values;
};

/// Weighted sum of the spec's terms. Terms of weight 0 are not evaluated.
/// All terms share one render; their weighted pixel gradients are summed in
/// term order and pulled back through the renderer once.
CompositeLoss composite_loss(const PaintingPlan& plan, const ObjectiveSpec& spec,
                             std::uint64_t salt = 0);

struct OptimizerConfig {
  int iterations = 500;
  double lr_geometry = 1e-2;
  double lr_color = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizationResult {
  PaintingPlan best_plan;
  std::size_t best_iteration = 0;
  double best_loss = 0.0;
  std::vector<double> loss_history;
  std::vector<std::vector<double>> term_history;  ///< per iteration, per term
};

using IterationCallback = std::function<void(int iteration, double loss)>;

/// Adam over the flattened plan with two learning-rate groups, projecting
/// every stroke back into range after each step. Iteration t evaluates the
/// objective with salt mix(cfg.seed, t). Returns the iterate with the lowest
/// recorded loss. Throws NumericError naming the iteration on a non-finite
/// loss or gradient.
OptimizationResult optimize(const PaintingPlan& plan0, const ObjectiveSpec& spec,
                            const OptimizerConfig& cfg, const IterationCallback& on_iteration = {});

}  // namespace synesthesia
