#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "doctest.h"
#include "label_table_oracle.hpp"
#include "oracles.hpp"
#include "synesthesia/emotion.hpp"
#include "synesthesia/error.hpp"
#include "synesthesia/rng.hpp"

using namespace synesthesia;

namespace {

std::vector<LabeledPooled> two_class_set(std::uint64_t seed, int per_class) {
  Rng rng(seed);
  std::vector<double> direction(ser_params::kInputs);
  for (double& v : direction) v = rng.normal();
  std::vector<LabeledPooled> data;
  for (int i = 0; i < 2 * per_class; ++i) {
    const bool positive = i % 2 == 0;
    std::vector<double> x(ser_params::kInputs);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.normal() + (positive ? 0.3 : -0.3) * direction[k];
    data.push_back({std::move(x), positive ? Emotion::kAnger : Emotion::kSadness});
  }
  return data;
}

}  // namespace

TEST_SUITE("emotion") {

TEST_CASE("canonical names") {
  for (int i = 0; i < kEmotionCount; ++i) {
    const auto e = static_cast<Emotion>(i);
    CHECK(emotion_from_name(emotion_name(e)) == e);
  }
  CHECK(emotion_name(Emotion::kSomethingElse) == "something-else");
  CHECK_FALSE(emotion_from_name("joy").has_value());
}

TEST_CASE("map_label reproduces every table cell") {
  for (const oracle::LabelCell& c : oracle::kLabelCells) {
    INFO(c.dataset, " / ", c.label);
    CHECK(emotion_name(map_label(c.dataset, c.label)) == c.emotion);
  }
}

TEST_CASE("the implementation's table holds nothing beyond the printed cells") {
  std::set<std::tuple<std::string, std::string>> expected;
  for (const oracle::LabelCell& c : oracle::kLabelCells) {
    std::string label = c.label;
    for (char& ch : label) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    expected.insert({c.dataset, label});
  }
  for (const auto& row : label_table()) {
    const std::string label(row.label);
    if (row.dataset == Dataset::kArtemis && label == "something-else") continue;
    CHECK(expected.count({std::string(dataset_name(row.dataset)), label}) == 1);
  }
}

TEST_CASE("awe has no speech source") {
  for (const auto& row : label_table()) {
    if (row.dataset != Dataset::kArtemis) CHECK(row.emotion != Emotion::kAwe);
  }
}

TEST_CASE("labels fold case, unknowns are rejected") {
  CHECK(map_label("CREMA", "hap") == Emotion::kAmusement);
  CHECK(map_label("Ravdess", "Happy") == Emotion::kAmusement);
  CHECK(map_label("iemocap", "XXX") == Emotion::kSomethingElse);
  CHECK_THROWS_AS(map_label("ravdess", "bored"), MappingError);
  CHECK_THROWS_AS(map_label("crema", "sur"), MappingError);
  CHECK_THROWS_AS(map_label("sav", "h"), MappingError);
  CHECK_THROWS_AS(map_label("emodb", "angry"), MappingError);
  CHECK_THROWS_AS(dataset_from_name(""), MappingError);
}

TEST_CASE("distribution helpers") {
  const auto d = one_hot(Emotion::kFear);
  CHECK(on_simplex(d));
  CHECK(argmax(d) == Emotion::kFear);
  EmotionDistribution bad{};
  CHECK_FALSE(on_simplex(bad));
  bad[0] = 1.5;
  bad[1] = -0.5;
  CHECK_FALSE(on_simplex(bad));
}

TEST_CASE("speech feature pooling layout") {
  const FeatureStack fs = extract_features(AudioClip{oracle::sine(440, 0.5), 16000});
  const auto pooled = pool_speech_features(fs);
  REQUIRE(pooled.size() == ser_params::kInputs);
  const auto bands = ser_mel_bands();
  CHECK(bands[0] == 0);
  CHECK(bands[1] == 3);
  CHECK(bands[19] == 60);
  const double n = double(fs.n_frames());
  double mfcc0 = 0.0, chroma0 = 0.0, mel_band3 = 0.0;
  for (std::size_t f = 0; f < fs.n_frames(); ++f) {
    mfcc0 += fs.mfcc(f, 0);
    chroma0 += fs.chroma(f, 0);
    mel_band3 += fs.mel(f, 3);
  }
  CHECK(pooled[0] == doctest::Approx(mfcc0 / n));
  CHECK(pooled[40] == doctest::Approx(chroma0 / n));
  CHECK(pooled[65] == doctest::Approx(mel_band3 / n));
  for (std::size_t i = 20; i < 40; ++i) CHECK(pooled[i] >= 0.0);
}

TEST_CASE("classifier output") {
  SpeechClassifierWeights zero;
  const std::vector<double> x(ser_params::kInputs, 0.3);
  for (double p : classify_pooled(x, zero)) CHECK(p == doctest::Approx(1.0 / 9.0));
  SpeechClassifierWeights biased;
  biased.b2[static_cast<int>(Emotion::kAnger)] = 5.0;
  CHECK(argmax(classify_pooled(x, biased)) == Emotion::kAnger);
  CHECK_THROWS_AS(classify_pooled(std::vector<double>(3), zero), ParameterError);

  // Large logits stay on the simplex.
  SpeechClassifierWeights huge;
  Rng rng(1);
  for (double& v : huge.w1.data) v = rng.normal() * 50;
  for (double& v : huge.w2.data) v = rng.normal() * 500;
  std::vector<double> y(ser_params::kInputs);
  for (double& v : y) v = rng.normal() * 10;
  const auto p = classify_pooled(y, huge);
  CHECK(on_simplex(p, 1e-12));
}

TEST_CASE("classifier weights round trip through SYNW1") {
  SpeechClassifierWeights w;
  Rng rng(2);
  for (double& v : w.w1.data) v = static_cast<float>(rng.normal());
  for (double& v : w.b2) v = static_cast<float>(rng.normal());
  CHECK(SpeechClassifierWeights::from_weight_file(WeightFile::parse(w.to_weight_file().serialize())) == w);
  WeightFile wrong;
  wrong.add("w1", Matrix(64, 103));
  wrong.add("b1", std::vector<double>(64));
  wrong.add("w2", Matrix(9, 64));
  wrong.add("b2", std::vector<double>(9));
  CHECK_THROWS_AS(SpeechClassifierWeights::from_weight_file(wrong), FormatError);
}

TEST_CASE("training separates two classes") {
  const auto data = two_class_set(3, 60);
  const TrainingResult r = train_speech_classifier(std::span<const LabeledPooled>(data), {});
  CHECK(r.accuracy >= 0.95);
  CHECK(r.loss_history.size() == 201);
  CHECK(r.loss_history.back() < r.loss_history.front());
  for (const auto& s : data) CHECK(on_simplex(classify_pooled(s.pooled, r.weights)));
  const TrainingResult again = train_speech_classifier(std::span<const LabeledPooled>(data), {});
  CHECK(again.weights == r.weights);
}

TEST_CASE("training preconditions") {
  auto one_class = two_class_set(4, 5);
  for (auto& s : one_class) s.label = Emotion::kFear;
  CHECK_THROWS_AS(train_speech_classifier(std::span<const LabeledPooled>(one_class), {}), ParameterError);
  auto data = two_class_set(4, 5);
  CHECK_THROWS_AS(train_speech_classifier(std::span<const LabeledPooled>(data), {-1, 1e-2, 0}),
                  ParameterError);
}

TEST_CASE("image emotion head") {
  const Image img(20, 20, {0.3, 0.6, 0.2});
  const auto zero = image_emotion(img, EmotionHead::zeros(kDefaultEmbeddingDim), 0);
  for (double p : zero) CHECK(p == doctest::Approx(1.0 / 9.0));
  const auto rnd = image_emotion(img, EmotionHead::random(kDefaultEmbeddingDim, 1), 0);
  CHECK(on_simplex(rnd));
  WeightFile wf = EmotionHead::random(16, 2).to_weight_file();
  CHECK(EmotionHead::from_weight_file(wf, 16).dim() == 16);
  CHECK_THROWS_AS(EmotionHead::from_weight_file(wf, 17), FormatError);
}

}  // TEST_SUITE
