#include "synesthesia/encoders.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "synesthesia/error.hpp"
#include "synesthesia/rng.hpp"

namespace synesthesia {

using namespace encoder_params;

namespace {

// Stream tags so one seed yields unrelated matrices per modality.
constexpr std::uint64_t kImageStream = 1;
constexpr std::uint64_t kAudioStream = 2;
constexpr std::uint64_t kTextStream = 3;

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.normal() * scale;
  return m;
}

void check_dim(std::size_t dim) {
  if (dim == 0) throw ParameterError("embedding dimension must be >= 1");
}

/// tanh then L2-normalize; returns the embedding and keeps h for the VJP.
Embedding squash_normalize(std::vector<double> z, std::vector<double>* h_out = nullptr) {
  double norm_sq = 0.0;
  for (double& v : z) {
    v = std::tanh(v);
    norm_sq += v * v;
  }
  const double norm = std::sqrt(norm_sq);
  if (!(norm > 0.0)) throw NumericError("encoder produced a zero vector before normalization");
  if (h_out) *h_out = z;
  for (double& v : z) v /= norm;
  return z;
}

std::vector<double> flatten_centered(const CanvasImage& small) {
  std::vector<double> x(small.data().begin(), small.data().end());
  for (double& v : x) v -= 0.5;
  return x;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

/// Lenient UTF-8 decoding; malformed sequences become U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + extra >= s.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += 1 + extra;
  }
  return out;
}

}  // namespace

ProjectionImageEncoder::ProjectionImageEncoder(std::size_t dim, std::uint64_t seed) {
  check_dim(dim);
  Rng rng(mix_seed(seed, kImageStream));
  projection_ = gaussian_matrix(rng, dim, kImageInputs, 1.0 / std::sqrt(double(kImageInputs)));
  bias_.resize(dim);
  for (double& b : bias_) b = 0.1 * rng.normal();
}

ProjectionImageEncoder::ProjectionImageEncoder(const WeightFile& weights, std::size_t dim)
    : projection_(weights.matrix("image_proj", dim, kImageInputs)),
      bias_(weights.vector("image_bias", dim)) {}

Embedding ProjectionImageEncoder::encode(const CanvasImage& img) const {
  const auto x = flatten_centered(resize_bilinear(img, kImageSide, kImageSide));
  auto z = matvec(projection_, x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += bias_[i];
  return squash_normalize(std::move(z));
}

ImageGradient ProjectionImageEncoder::vjp(const CanvasImage& img,
                                          std::span<const double> upstream) const {
  if (upstream.size() != dim()) throw ParameterError("image encoder VJP: upstream dimension mismatch");
  const SamplingGrid grid = resize_grid(img.width(), img.height(), kImageSide, kImageSide);
  const auto x = flatten_centered(grid.apply(img));
  auto z = matvec(projection_, x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += bias_[i];
  std::vector<double> h;
  const Embedding e = squash_normalize(std::move(z), &h);
  double norm_sq = 0.0;
  for (double v : h) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  // e = h / |h|  =>  de/dh^T g = (g - e (e . g)) / |h|;  dh/dz = 1 - h^2.
  double e_dot_g = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) e_dot_g += e[i] * upstream[i];
  std::vector<double> gz(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    gz[i] = (upstream[i] - e[i] * e_dot_g) / norm * (1.0 - h[i] * h[i]);
  }
  const auto gx = matvec_transposed(projection_, gz);
  Image g_small(kImageSide, kImageSide);
  std::copy(gx.begin(), gx.end(), g_small.data().begin());
  ImageGradient grad(img.width(), img.height());
  grid.apply_vjp(g_small, grad);
  return grad;
}

std::vector<double> pool_audio_features(const FeatureStack& features) {
  const std::size_t frames = features.n_frames();
  if (frames == 0) throw ParameterError("audio encoder: empty feature stack");
  if (features.chroma.rows != frames || features.mel.cols != std::size_t(audio_params::kMelBands) ||
      features.chroma.cols != std::size_t(audio_params::kChromaClasses)) {
    throw ParameterError("audio encoder: inconsistent feature stack shapes");
  }
  const double mel_scale = 1.0 / std::abs(std::log(audio_params::kLogFloor));
  std::vector<double> out;
  out.reserve(kAudioInputs);
  auto pool = [&](const Matrix& m, double scale) {
    std::vector<double> mean(m.cols, 0.0), sd(m.cols, 0.0);
    for (std::size_t c = 0; c < m.cols; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < m.rows; ++r) s += m(r, c) * scale;
      mean[c] = s / m.rows;
      double v = 0.0;
      for (std::size_t r = 0; r < m.rows; ++r) {
        const double d = m(r, c) * scale - mean[c];
        v += d * d;
      }
      sd[c] = std::sqrt(v / m.rows);
    }
    out.insert(out.end(), mean.begin(), mean.end());
    out.insert(out.end(), sd.begin(), sd.end());
  };
  pool(features.mel, mel_scale);
  pool(features.chroma, 1.0);
  return out;
}

ProjectionAudioEncoder::ProjectionAudioEncoder(std::size_t dim, std::uint64_t seed) {
  check_dim(dim);
  Rng rng(mix_seed(seed, kAudioStream));
  projection_ = gaussian_matrix(rng, dim, kAudioInputs, 1.0 / std::sqrt(double(kAudioInputs)));
  bias_.resize(dim);
  for (double& b : bias_) b = 0.1 * rng.normal();
}

ProjectionAudioEncoder::ProjectionAudioEncoder(const WeightFile& weights, std::size_t dim)
    : projection_(weights.matrix("audio_proj", dim, kAudioInputs)),
      bias_(weights.vector("audio_bias", dim)) {}

Embedding ProjectionAudioEncoder::encode(const FeatureStack& features) const {
  auto z = matvec(projection_, pool_audio_features(features));
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += bias_[i];
  return squash_normalize(std::move(z));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> trigram_histogram(std::string_view text) {
  if (text.empty()) throw ParameterError("text encoder: empty string");
  std::vector<char32_t> cps{0x02};
  for (char32_t cp : decode_utf8(text)) {
    if (cp >= U'A' && cp <= U'Z') cp += U'a' - U'A';
    cps.push_back(cp);
  }
  cps.push_back(0x03);
  std::vector<double> hist(kTextBins, 0.0);
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    std::string gram;
    for (std::size_t k = 0; k < 3; ++k) append_utf8(gram, cps[i + k]);
    hist[fnv1a64(gram) % kTextBins] += 1.0;
  }
  double norm_sq = 0.0;
  for (double v : hist) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  for (double& v : hist) v /= norm;
  return hist;
}

TrigramTextEncoder::TrigramTextEncoder(std::size_t dim, std::uint64_t seed) {
  check_dim(dim);
  Rng rng(mix_seed(seed, kTextStream));
  projection_ = gaussian_matrix(rng, dim, kTextBins, 1.0);
}

TrigramTextEncoder::TrigramTextEncoder(const WeightFile& weights, std::size_t dim)
    : projection_(weights.matrix("text_proj", dim, kTextBins)) {}

Embedding TrigramTextEncoder::encode(std::string_view text) const {
  return squash_normalize(matvec(projection_, trigram_histogram(text)));
}

namespace {

template <typename T>
std::shared_ptr<const T> cached(std::uint64_t seed, std::size_t dim) {
  static std::mutex mutex;
  static std::map<std::pair<std::uint64_t, std::size_t>, std::shared_ptr<const T>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{seed, dim}];
  if (!slot) slot = std::make_shared<const T>(dim, seed);
  return slot;
}

}  // namespace

std::shared_ptr<const ProjectionImageEncoder> reference_image_encoder(std::uint64_t seed,
                                                                      std::size_t dim) {
  return cached<ProjectionImageEncoder>(seed, dim);
}

std::shared_ptr<const ProjectionAudioEncoder> reference_audio_encoder(std::uint64_t seed,
                                                                      std::size_t dim) {
  return cached<ProjectionAudioEncoder>(seed, dim);
}

std::shared_ptr<const TrigramTextEncoder> reference_text_encoder(std::uint64_t seed,
                                                                 std::size_t dim) {
  return cached<TrigramTextEncoder>(seed, dim);
}

Embedding encode_image(const CanvasImage& img, std::uint64_t seed) {
  return reference_image_encoder(seed)->encode(img);
}

ImageGradient encode_image_vjp(const CanvasImage& img, std::span<const double> upstream,
                               std::uint64_t seed) {
  return reference_image_encoder(seed)->vjp(img, upstream);
}

Embedding encode_audio(const FeatureStack& features, std::uint64_t seed) {
  return reference_audio_encoder(seed)->encode(features);
}

Embedding encode_text(std::string_view text, std::uint64_t seed) {
  return reference_text_encoder(seed)->encode(text);
}

}  // namespace synesthesia
