#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "synesthesia/audio.hpp"
#include "synesthesia/canvas.hpp"
#include "synesthesia/matrix.hpp"
#include "synesthesia/weight_file.hpp"

namespace synesthesia {

/// Unit-norm vector in the shared image/audio/text space.
using Embedding = std::vector<double>;

inline constexpr std::size_t kDefaultEmbeddingDim = 128;

namespace encoder_params {
inline constexpr int kImageSide = 32;
inline constexpr std::size_t kImageInputs = kImageSide * kImageSide * 3;  // 3072
inline constexpr std::size_t kAudioInputs = 2 * (audio_params::kMelBands + audio_params::kChromaClasses);
inline constexpr std::size_t kTextBins = 4096;
}  // namespace encoder_params

class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual Embedding encode(const CanvasImage& img) const = 0;
  /// Gradient w.r.t. the pixels of `img` of <upstream, encode(img)>.
  virtual ImageGradient vjp(const CanvasImage& img, std::span<const double> upstream) const = 0;
};

class AudioEncoder {
 public:
  virtual ~AudioEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual Embedding encode(const FeatureStack& features) const = 0;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual Embedding encode(std::string_view text) const = 0;
};

/// Reference image encoder: resize to 32x32, flatten pixels centered at 0.5
/// (index (y * 32 + x) * 3 + c), project, add bias, tanh, L2-normalize.
class ProjectionImageEncoder final : public ImageEncoder {
 public:
  /// Seeded projection with N(0,1)/sqrt(3072) entries and N(0, 0.1^2) bias.
  ProjectionImageEncoder(std::size_t dim, std::uint64_t seed);
  /// Tensors "image_proj" [D x 3072] and "image_bias" [D].
  ProjectionImageEncoder(const WeightFile& weights, std::size_t dim);

  std::size_t dim() const override { return projection_.rows; }
  Embedding encode(const CanvasImage& img) const override;
  ImageGradient vjp(const CanvasImage& img, std::span<const double> upstream) const override;

  const Matrix& projection() const { return projection_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  Matrix projection_;
  std::vector<double> bias_;
};

/// Reference audio encoder: pooled mel/chroma statistics, projection, tanh,
/// L2-normalize.
class ProjectionAudioEncoder final : public AudioEncoder {
 public:
  ProjectionAudioEncoder(std::size_t dim, std::uint64_t seed);
  /// Tensors "audio_proj" [D x 152] and "audio_bias" [D].
  ProjectionAudioEncoder(const WeightFile& weights, std::size_t dim);

  std::size_t dim() const override { return projection_.rows; }
  Embedding encode(const FeatureStack& features) const override;

 private:
  Matrix projection_;
  std::vector<double> bias_;
};

/// Reference text encoder: hashed character trigram counts, projection, tanh,
/// L2-normalize.
class TrigramTextEncoder final : public TextEncoder {
 public:
  TrigramTextEncoder(std::size_t dim, std::uint64_t seed);
  /// Tensor "text_proj" [D x 4096].
  TrigramTextEncoder(const WeightFile& weights, std::size_t dim);

  std::size_t dim() const override { return projection_.rows; }
  Embedding encode(std::string_view text) const override;

 private:
  Matrix projection_;
};

/// Pooled audio statistics in the order [mel mean (64), mel std (64),
/// chroma mean (12), chroma std (12)]. Log-mel values are divided by
/// |ln 1e-10| first so both halves share a comparable scale.
std::vector<double> pool_audio_features(const FeatureStack& features);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Trigram histogram over code points of "\x02" + lowercase(text) + "\x03",
/// hashed into 4096 bins and L2-normalized.
std::vector<double> trigram_histogram(std::string_view text);

/// Process-wide cache of reference encoders keyed by (dim, seed).
std::shared_ptr<const ProjectionImageEncoder> reference_image_encoder(
    std::uint64_t seed, std::size_t dim = kDefaultEmbeddingDim);
std::shared_ptr<const ProjectionAudioEncoder> reference_audio_encoder(
    std::uint64_t seed, std::size_t dim = kDefaultEmbeddingDim);
std::shared_ptr<const TrigramTextEncoder> reference_text_encoder(
    std::uint64_t seed, std::size_t dim = kDefaultEmbeddingDim);

Embedding encode_image(const CanvasImage& img, std::uint64_t seed);
ImageGradient encode_image_vjp(const CanvasImage& img, std::span<const double> upstream,
                               std::uint64_t seed);
Embedding encode_audio(const FeatureStack& features, std::uint64_t seed);
Embedding encode_text(std::string_view text, std::uint64_t seed);

}  // namespace synesthesia
