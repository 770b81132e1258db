#include "synesthesia/emotion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>

#include "synesthesia/adam.hpp"
#include "synesthesia/error.hpp"
#include "synesthesia/rng.hpp"

namespace synesthesia {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

constexpr std::uint64_t kHeadStream = 4;
constexpr std::uint64_t kClassifierStream = 5;

using E = Emotion;
using D = Dataset;

// Lowercase labels; crema codes are printed upper-case in the source table.
constexpr LabelCorrespondence kTable[] = {
    {D::kArtemis, "amusement", E::kAmusement},
    {D::kArtemis, "anger", E::kAnger},
    {D::kArtemis, "awe", E::kAwe},
    {D::kArtemis, "contentment", E::kContentment},
    {D::kArtemis, "disgust", E::kDisgust},
    {D::kArtemis, "excitement", E::kExcitement},
    {D::kArtemis, "fear", E::kFear},
    {D::kArtemis, "sadness", E::kSadness},
    {D::kArtemis, "something-else", E::kSomethingElse},
    {D::kArtemis, "something else", E::kSomethingElse},

    {D::kRavdess, "happy", E::kAmusement},
    {D::kRavdess, "angry", E::kAnger},
    {D::kRavdess, "calm", E::kContentment},
    {D::kRavdess, "disgust", E::kDisgust},
    {D::kRavdess, "surprise", E::kExcitement},
    {D::kRavdess, "fear", E::kFear},
    {D::kRavdess, "sad", E::kSadness},
    {D::kRavdess, "neutral", E::kSomethingElse},

    {D::kCrema, "hap", E::kAmusement},
    {D::kCrema, "ang", E::kAnger},
    {D::kCrema, "dis", E::kDisgust},
    {D::kCrema, "fea", E::kFear},
    {D::kCrema, "sad", E::kSadness},
    {D::kCrema, "neu", E::kSomethingElse},

    {D::kTess, "happy", E::kAmusement},
    {D::kTess, "angry", E::kAnger},
    {D::kTess, "disgust", E::kDisgust},
    {D::kTess, "surprise", E::kExcitement},
    {D::kTess, "fear", E::kFear},
    {D::kTess, "sad", E::kSadness},
    {D::kTess, "neutral", E::kSomethingElse},

    {D::kSav, "a", E::kAnger},
    {D::kSav, "d", E::kDisgust},
    {D::kSav, "su", E::kExcitement},
    {D::kSav, "f", E::kFear},
    {D::kSav, "sa", E::kSadness},
    {D::kSav, "n", E::kSomethingElse},

    {D::kIemocap, "hap", E::kAmusement},
    {D::kIemocap, "exc", E::kAmusement},
    {D::kIemocap, "fru", E::kAnger},
    {D::kIemocap, "ang", E::kAnger},
    {D::kIemocap, "dis", E::kDisgust},
    {D::kIemocap, "sur", E::kExcitement},
    {D::kIemocap, "fea", E::kFear},
    {D::kIemocap, "sad", E::kSadness},
    {D::kIemocap, "neu", E::kSomethingElse},
    {D::kIemocap, "xxx", E::kSomethingElse},
    {D::kIemocap, "oth", E::kSomethingElse},
};

EmotionDistribution softmax(std::span<const double> logits) {
  EmotionDistribution p{};
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (int k = 0; k < kEmotionCount; ++k) {
    p[k] = std::exp(logits[k] - mx);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

std::string_view emotion_name(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }

std::optional<Emotion> emotion_from_name(std::string_view name) {
  const std::string folded = lower(name);
  for (int i = 0; i < kEmotionCount; ++i) {
    if (kEmotionNames[i] == folded) return static_cast<Emotion>(i);
  }
  if (folded == "something else") return Emotion::kSomethingElse;
  return std::nullopt;
}

EmotionDistribution one_hot(Emotion e) {
  EmotionDistribution d{};
  d[static_cast<int>(e)] = 1.0;
  return d;
}

Emotion argmax(const EmotionDistribution& d) {
  return static_cast<Emotion>(std::max_element(d.begin(), d.end()) - d.begin());
}

bool on_simplex(const EmotionDistribution& d, double tol) {
  double sum = 0.0;
  for (double v : d) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::string_view dataset_name(Dataset d) {
  switch (d) {
    case Dataset::kArtemis: return "artemis";
    case Dataset::kRavdess: return "ravdess";
    case Dataset::kCrema: return "crema";
    case Dataset::kTess: return "tess";
    case Dataset::kSav: return "sav";
    case Dataset::kIemocap: return "iemocap";
  }
  return "?";
}

Dataset dataset_from_name(std::string_view name) {
  const std::string folded = lower(name);
  for (Dataset d : {Dataset::kArtemis, Dataset::kRavdess, Dataset::kCrema, Dataset::kTess,
                    Dataset::kSav, Dataset::kIemocap}) {
    if (dataset_name(d) == folded) return d;
  }
  throw MappingError("unknown emotion dataset '" + std::string(name) + "'");
}

std::span<const LabelCorrespondence> label_table() { return kTable; }

Emotion map_label(const DatasetLabel& dl) {
  const std::string folded = lower(dl.label);
  for (const auto& row : kTable) {
    if (row.dataset == dl.dataset && row.label == folded) return row.emotion;
  }
  throw MappingError("no emotion correspondence for (" + std::string(dataset_name(dl.dataset)) +
                     ", \"" + dl.label + "\")");
}

Emotion map_label(std::string_view dataset, std::string_view label) {
  return map_label(DatasetLabel{dataset_from_name(dataset), std::string(label)});
}

std::array<int, ser_params::kMelSubsample> ser_mel_bands() {
  std::array<int, ser_params::kMelSubsample> bands{};
  for (std::size_t i = 0; i < bands.size(); ++i) {
    bands[i] = static_cast<int>(i * audio_params::kMelBands / ser_params::kMelSubsample);
  }
  return bands;
}

std::vector<double> pool_speech_features(const FeatureStack& features) {
  const std::size_t frames = features.n_frames();
  if (frames == 0) throw ParameterError("speech features: empty feature stack");
  if (features.mfcc.rows != frames || features.chroma.rows != frames) {
    throw ParameterError("speech features: feature matrices disagree on frame count");
  }
  std::vector<double> out;
  out.reserve(ser_params::kInputs);
  auto pool = [&](const Matrix& m, std::span<const int> cols) {
    std::vector<double> mean, sd;
    for (int c : cols) {
      double s = 0.0;
      for (std::size_t r = 0; r < frames; ++r) s += m(r, c);
      const double mu = s / frames;
      double v = 0.0;
      for (std::size_t r = 0; r < frames; ++r) v += (m(r, c) - mu) * (m(r, c) - mu);
      mean.push_back(mu);
      sd.push_back(std::sqrt(v / frames));
    }
    out.insert(out.end(), mean.begin(), mean.end());
    out.insert(out.end(), sd.begin(), sd.end());
  };
  auto all = [](std::size_t n) {
    std::vector<int> cols(n);
    for (std::size_t i = 0; i < n; ++i) cols[i] = static_cast<int>(i);
    return cols;
  };
  pool(features.mfcc, all(features.mfcc.cols));
  pool(features.chroma, all(features.chroma.cols));
  const auto bands = ser_mel_bands();
  pool(features.mel, bands);
  if (out.size() != ser_params::kInputs) {
    throw ParameterError("speech features: pooled vector has " + std::to_string(out.size()) +
                         " values, expected 104");
  }
  return out;
}

SpeechClassifierWeights SpeechClassifierWeights::from_weight_file(const WeightFile& wf) {
  using namespace ser_params;
  SpeechClassifierWeights w;
  w.w1 = wf.matrix("w1", kHidden, kInputs);
  w.b1 = wf.vector("b1", kHidden);
  w.w2 = wf.matrix("w2", kEmotionCount, kHidden);
  w.b2 = wf.vector("b2", kEmotionCount);
  return w;
}

WeightFile SpeechClassifierWeights::to_weight_file() const {
  WeightFile wf;
  wf.add("w1", w1);
  wf.add("b1", b1);
  wf.add("w2", w2);
  wf.add("b2", b2);
  return wf;
}

EmotionDistribution classify_pooled(std::span<const double> pooled,
                                    const SpeechClassifierWeights& w) {
  if (pooled.size() != ser_params::kInputs) {
    throw ParameterError("classifier input must have 104 values");
  }
  auto hidden = matvec(w.w1, pooled);
  for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] = std::tanh(hidden[i] + w.b1[i]);
  auto logits = matvec(w.w2, hidden);
  for (int k = 0; k < kEmotionCount; ++k) logits[k] += w.b2[k];
  return softmax(logits);
}

EmotionDistribution speech_emotion(const FeatureStack& features,
                                   const SpeechClassifierWeights& weights) {
  return classify_pooled(pool_speech_features(features), weights);
}

namespace {

std::vector<double> pack(const SpeechClassifierWeights& w) {
  std::vector<double> p;
  p.insert(p.end(), w.w1.data.begin(), w.w1.data.end());
  p.insert(p.end(), w.b1.begin(), w.b1.end());
  p.insert(p.end(), w.w2.data.begin(), w.w2.data.end());
  p.insert(p.end(), w.b2.begin(), w.b2.end());
  return p;
}

void unpack(std::span<const double> p, SpeechClassifierWeights& w) {
  auto it = p.begin();
  for (auto* v : {&w.w1.data, &w.b1, &w.w2.data, &w.b2}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
    it += static_cast<std::ptrdiff_t>(v->size());
  }
}

/// Mean cross-entropy and, when `grad` is non-null, its gradient in pack() order.
double cross_entropy(const SpeechClassifierWeights& w, std::span<const LabeledPooled> data,
                     SpeechClassifierWeights* grad, std::size_t* correct) {
  using namespace ser_params;
  const double inv_n = 1.0 / static_cast<double>(data.size());
  double loss = 0.0;
  if (correct) *correct = 0;
  for (const auto& sample : data) {
    auto hidden = matvec(w.w1, sample.pooled);
    for (std::size_t i = 0; i < kHidden; ++i) hidden[i] = std::tanh(hidden[i] + w.b1[i]);
    auto logits = matvec(w.w2, hidden);
    for (int k = 0; k < kEmotionCount; ++k) logits[k] += w.b2[k];
    const EmotionDistribution p = softmax(logits);
    const int y = static_cast<int>(sample.label);
    loss -= std::log(std::max(p[y], 1e-300)) * inv_n;
    if (correct && static_cast<int>(argmax(p)) == y) ++*correct;
    if (!grad) continue;
    std::vector<double> d_logits(kEmotionCount);
    for (int k = 0; k < kEmotionCount; ++k) d_logits[k] = (p[k] - (k == y ? 1.0 : 0.0)) * inv_n;
    for (int k = 0; k < kEmotionCount; ++k) {
      grad->b2[k] += d_logits[k];
      for (std::size_t j = 0; j < kHidden; ++j) grad->w2(k, j) += d_logits[k] * hidden[j];
    }
    auto d_hidden = matvec_transposed(w.w2, d_logits);
    for (std::size_t j = 0; j < kHidden; ++j) {
      const double d_pre = d_hidden[j] * (1.0 - hidden[j] * hidden[j]);
      grad->b1[j] += d_pre;
      for (std::size_t i = 0; i < kInputs; ++i) grad->w1(j, i) += d_pre * sample.pooled[i];
    }
  }
  return loss;
}

}  // namespace

TrainingResult train_speech_classifier(std::span<const LabeledPooled> data,
                                       const TrainingConfig& config) {
  using namespace ser_params;
  std::set<Emotion> classes;
  for (const auto& s : data) {
    if (s.pooled.size() != kInputs) throw ParameterError("training sample must have 104 values");
    classes.insert(s.label);
  }
  if (classes.size() < 2) {
    throw ParameterError("classifier training needs at least two distinct classes");
  }
  if (config.epochs < 0 || !(config.learning_rate > 0.0)) {
    throw ParameterError("invalid classifier training configuration");
  }

  SpeechClassifierWeights w;
  Rng rng(mix_seed(config.seed, kClassifierStream));
  for (double& v : w.w1.data) v = rng.normal() / std::sqrt(double(kInputs));
  for (double& v : w.w2.data) v = rng.normal() / std::sqrt(double(kHidden));

  auto params = pack(w);
  Adam adam(params.size());
  TrainingResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    SpeechClassifierWeights grad;
    result.loss_history.push_back(cross_entropy(w, data, &grad, nullptr));
    const auto g = pack(grad);
    adam.step(params, g, config.learning_rate);
    unpack(params, w);
  }
  std::size_t correct = 0;
  result.loss_history.push_back(cross_entropy(w, data, nullptr, &correct));
  result.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  result.weights = std::move(w);
  return result;
}

TrainingResult train_speech_classifier(std::span<const LabeledFeatures> data,
                                       const TrainingConfig& config) {
  std::vector<LabeledPooled> pooled;
  pooled.reserve(data.size());
  for (const auto& s : data) {
    pooled.push_back({pool_speech_features(s.features), map_label(s.label)});
  }
  return train_speech_classifier(std::span<const LabeledPooled>(pooled), config);
}

EmotionHead EmotionHead::zeros(std::size_t dim) {
  return {Matrix(kEmotionCount, dim), std::vector<double>(kEmotionCount, 0.0)};
}

EmotionHead EmotionHead::random(std::size_t dim, std::uint64_t seed) {
  EmotionHead head = zeros(dim);
  Rng rng(mix_seed(seed, kHeadStream));
  for (double& v : head.we.data) v = rng.normal();
  return head;
}

EmotionHead EmotionHead::from_weight_file(const WeightFile& wf, std::size_t dim) {
  return {wf.matrix("we", kEmotionCount, dim), wf.vector("be", kEmotionCount)};
}

WeightFile EmotionHead::to_weight_file() const {
  WeightFile wf;
  wf.add("we", we);
  wf.add("be", be);
  return wf;
}

namespace {

void check_head(const ImageEncoder& encoder, const EmotionHead& head) {
  if (head.we.rows != static_cast<std::size_t>(kEmotionCount) || head.be.size() != head.we.rows ||
      head.we.cols != encoder.dim()) {
    throw FormatError("emotion head shape [" + std::to_string(head.we.rows) + "x" +
                      std::to_string(head.we.cols) + "] does not match encoder dimension " +
                      std::to_string(encoder.dim()));
  }
}

}  // namespace

EmotionDistribution image_emotion(const CanvasImage& img, const ImageEncoder& encoder,
                                  const EmotionHead& head) {
  check_head(encoder, head);
  auto logits = matvec(head.we, encoder.encode(img));
  for (int k = 0; k < kEmotionCount; ++k) logits[k] += head.be[k];
  return softmax(logits);
}

ImageGradient image_emotion_vjp(const CanvasImage& img, const ImageEncoder& encoder,
                                const EmotionHead& head, const EmotionDistribution& upstream) {
  const EmotionDistribution p = image_emotion(img, encoder, head);
  double p_dot_g = 0.0;
  for (int k = 0; k < kEmotionCount; ++k) p_dot_g += p[k] * upstream[k];
  std::vector<double> g_logits(kEmotionCount);
  for (int k = 0; k < kEmotionCount; ++k) g_logits[k] = p[k] * (upstream[k] - p_dot_g);
  return encoder.vjp(img, matvec_transposed(head.we, g_logits));
}

EmotionDistribution image_emotion(const CanvasImage& img, const EmotionHead& head,
                                  std::uint64_t seed) {
  return image_emotion(img, *reference_image_encoder(seed, head.dim()), head);
}

}  // namespace synesthesia
