#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synesthesia/audio.hpp"
#include "synesthesia/canvas.hpp"
#include "synesthesia/encoders.hpp"
#include "synesthesia/matrix.hpp"
#include "synesthesia/weight_file.hpp"

namespace synesthesia {

/// Canonical nine-class taxonomy, in ArtEmis order.
enum class Emotion : int {
  kAmusement = 0,
  kAnger,
  kAwe,
  kContentment,
  kDisgust,
  kExcitement,
  kFear,
  kSadness,
  kSomethingElse,
};
inline constexpr int kEmotionCount = 9;

inline constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "amusement", "anger", "awe", "contentment", "disgust",
    "excitement", "fear", "sadness", "something-else"};

std::string_view emotion_name(Emotion e);
std::optional<Emotion> emotion_from_name(std::string_view name);

using EmotionDistribution = std::array<double, kEmotionCount>;

EmotionDistribution one_hot(Emotion e);
Emotion argmax(const EmotionDistribution& d);
/// Entries >= 0 and summing to 1 within `tol`.
bool on_simplex(const EmotionDistribution& d, double tol = 1e-6);

enum class Dataset { kArtemis, kRavdess, kCrema, kTess, kSav, kIemocap };

std::string_view dataset_name(Dataset d);
/// Case-insensitive; throws MappingError for unknown names.
Dataset dataset_from_name(std::string_view name);

struct DatasetLabel {
  Dataset dataset;
  std::string label;
};

/// One filled cell of the cross-dataset correspondence table.
struct LabelCorrespondence {
  Dataset dataset;
  std::string_view label;
  Emotion emotion;
};

/// Every filled cell of the correspondence table, artemis column included.
std::span<const LabelCorrespondence> label_table();

/// Harmonizes a dataset-specific label (matched after lowercase folding).
/// Throws MappingError naming the pair when it has no table entry.
Emotion map_label(const DatasetLabel& label);
Emotion map_label(std::string_view dataset, std::string_view label);

namespace ser_params {
inline constexpr std::size_t kInputs = 104;
inline constexpr std::size_t kHidden = 64;
inline constexpr std::size_t kMelSubsample = 20;
}  // namespace ser_params

/// Mel bands kept for the classifier input: floor(i * 64 / 20), i = 0..19.
std::array<int, ser_params::kMelSubsample> ser_mel_bands();

/// 104-dim classifier input, ordered [mfcc mean (20), mfcc std (20),
/// chroma mean (12), chroma std (12), mel mean (20), mel std (20)] with mel
/// restricted to ser_mel_bands(). Standard deviations are population ones.
std::vector<double> pool_speech_features(const FeatureStack& features);

/// Two-layer speech-emotion classifier: softmax(w2 tanh(w1 x + b1) + b2).
struct SpeechClassifierWeights {
  Matrix w1{ser_params::kHidden, ser_params::kInputs};
  std::vector<double> b1 = std::vector<double>(ser_params::kHidden, 0.0);
  Matrix w2{kEmotionCount, ser_params::kHidden};
  std::vector<double> b2 = std::vector<double>(kEmotionCount, 0.0);

  /// Tensors "w1" [64x104], "b1" [64], "w2" [9x64], "b2" [9].
  static SpeechClassifierWeights from_weight_file(const WeightFile& wf);
  WeightFile to_weight_file() const;

  friend bool operator==(const SpeechClassifierWeights&, const SpeechClassifierWeights&) = default;
};

EmotionDistribution classify_pooled(std::span<const double> pooled,
                                    const SpeechClassifierWeights& weights);
EmotionDistribution speech_emotion(const FeatureStack& features,
                                   const SpeechClassifierWeights& weights);

struct LabeledFeatures {
  FeatureStack features;
  DatasetLabel label;
};

struct LabeledPooled {
  std::vector<double> pooled;  ///< 104 values, see pool_speech_features
  Emotion label;
};

struct TrainingConfig {
  int epochs = 200;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

struct TrainingResult {
  SpeechClassifierWeights weights;
  double accuracy = 0.0;
  /// Mean cross-entropy; entry 0 is at initialization, entry k after epoch k.
  std::vector<double> loss_history;
};

/// Full-batch Adam on mean cross-entropy. Requires at least two classes.
TrainingResult train_speech_classifier(std::span<const LabeledPooled> data,
                                       const TrainingConfig& config);
/// Pools features and harmonizes labels with map_label first.
TrainingResult train_speech_classifier(std::span<const LabeledFeatures> data,
                                       const TrainingConfig& config);

/// Linear emotion head on top of an image embedding.
struct EmotionHead {
  Matrix we;               ///< 9 x D
  std::vector<double> be;  ///< 9

  static EmotionHead zeros(std::size_t dim);
  /// Seeded N(0,1) weights and zero bias; a stand-in until real weights exist.
  static EmotionHead random(std::size_t dim, std::uint64_t seed);
  /// Tensors "we" [9 x D] and "be" [9].
  static EmotionHead from_weight_file(const WeightFile& wf, std::size_t dim);
  WeightFile to_weight_file() const;

  std::size_t dim() const { return we.cols; }
};

EmotionDistribution image_emotion(const CanvasImage& img, const ImageEncoder& encoder,
                                  const EmotionHead& head);
/// Pixel gradient of <upstream, image_emotion(img)>.
ImageGradient image_emotion_vjp(const CanvasImage& img, const ImageEncoder& encoder,
                                const EmotionHead& head, const EmotionDistribution& upstream);

/// Reference-encoder convenience overload.
EmotionDistribution image_emotion(const CanvasImage& img, const EmotionHead& head,
                                  std::uint64_t seed);

}  // namespace synesthesia
