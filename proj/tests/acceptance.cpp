// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "label_table_oracle.hpp"
#include "oracles.hpp"
#include "synesthesia/audio.hpp"
#include "synesthesia/emotion.hpp"
#include "synesthesia/error.hpp"
#include "synesthesia/gradcheck.hpp"
#include "synesthesia/objective.hpp"
#include "synesthesia/parallel.hpp"
#include "synesthesia/plan_io.hpp"
#include "synesthesia/rng.hpp"
#include "synesthesia/strokes.hpp"
#include "synesthesia/weight_file.hpp"

using namespace synesthesia;

namespace {

// Pinned tolerances.
constexpr int kGradcheckConfigs = 100;
constexpr double kRendererTol = 1e-3;
constexpr int kOracleSamples = 10000;
constexpr double kMfccZeroTol = 1e-9;
constexpr double kParsevalRelTol = 1e-6;
constexpr double kDescentRatio = 0.1;
constexpr double kCompositeSumTol = 1e-12;
constexpr double kAccuracyFloor = 0.95;
constexpr int kTrainingEpochs = 200;
constexpr double kSimplexTol = 1e-6;
constexpr double kPngTol = 1.0 / 255.0;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::size_t argmax_of(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// 1. Analytic gradients against central differences.
Outcome gradient_suite() {
  GradcheckOptions opt;
  opt.seed = 0;
  opt.configs = kGradcheckConfigs;
  const GradcheckReport report = run_gradcheck(opt);
  std::string detail;
  for (const auto& c : report.components) {
    if (!detail.empty()) detail += ", ";
    detail += c.name + "=" + fmt("%.2e", c.max_relative_error) + (c.passed ? "" : "(!)");
  }
  return {report.all_passed(), detail};
}

// 2. Exact renderer against the brute-force sampled renderer.
Outcome renderer_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    PaintingPlan plan;
    plan.canvas_width_px = 48 + static_cast<int>(rng.uniform() * 17);
    plan.canvas_height_px = 48 + static_cast<int>(rng.uniform() * 17);
    plan.softness = rng.uniform(0.002, 0.02);
    plan.background = {rng.uniform(), rng.uniform(), rng.uniform()};
    StrokeParams s;
    s.x = rng.uniform();
    s.y = rng.uniform();
    s.orientation = rng.uniform(-std::numbers::pi, std::numbers::pi);
    s.length = rng.uniform(stroke_limits::kLengthMin, stroke_limits::kLengthMax);
    s.bend = rng.uniform(stroke_limits::kBendMin, stroke_limits::kBendMax);
    s.thickness = rng.uniform(stroke_limits::kThicknessMin, stroke_limits::kThicknessMax);
    for (double& c : s.color) c = rng.uniform();
    s.opacity = rng.uniform();
    plan.strokes.push_back(s);
    const Image got = render_plan(plan);
    const Image ref = oracle::render(plan, kOracleSamples);
    for (std::size_t k = 0; k < got.data().size(); ++k) {
      worst = std::max(worst, std::abs(got.data()[k] - ref.data()[k]));
    }
  }
  return {worst <= kRendererTol, "max channel diff " + fmt("%.2e", worst)};
}

// 3. Spectral features against first-principles expectations.
Outcome dsp_oracles() {
  std::vector<std::string> failures;

  const std::size_t len = 16000;
  const FeatureStack a440 = extract_features(AudioClip{oracle::sine(440, 1.0), 16000});
  std::string chroma_misses;
  for (std::size_t f = 0; f < a440.n_frames(); ++f) {
    if (argmax_of(a440.chroma.row(f)) != 0) {
      const std::size_t in_clip = std::min<std::size_t>(audio_params::kFrameLength, len - f * audio_params::kHop);
      chroma_misses += (chroma_misses.empty() ? "" : ",") + std::to_string(f) + "[" + std::to_string(in_clip) +
                       " samples]";
    }
  }
  if (!chroma_misses.empty()) {
    failures.push_back("chroma argmax != A in frames " + chroma_misses + " of " +
                       std::to_string(a440.n_frames()));
  }

  const Matrix s1k = stft_magnitude(AudioClip{oracle::sine(1000, 1.0), 16000});
  for (std::size_t f = 0; f < s1k.rows; ++f) {
    if (argmax_of(s1k.row(f)) != 64) {
      failures.push_back("stft frame " + std::to_string(f));
      break;
    }
  }

  double mfcc_max = 0.0;
  for (double level : {-23.0, -5.0, 0.0, 2.5}) {
    const Matrix c = mfcc(Matrix(1, audio_params::kMelBands, level));
    for (int k = 1; k < audio_params::kMfccCount; ++k) mfcc_max = std::max(mfcc_max, std::abs(c(0, k)));
  }
  if (mfcc_max > kMfccZeroTol) failures.push_back("mfcc " + fmt("%.1e", mfcc_max));

  Rng rng(5);
  std::vector<double> x(audio_params::kFrameLength);
  for (double& v : x) v = rng.uniform(-1, 1);
  const Matrix spec = stft_magnitude(AudioClip{x, 16000});
  const auto w = oracle::hann(audio_params::kFrameLength);
  double time_energy = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) time_energy += x[n] * w[n] * x[n] * w[n];
  const int half = audio_params::kFrameLength / 2;
  double freq_energy = spec(0, 0) * spec(0, 0) + spec(0, half) * spec(0, half);
  for (int k = 1; k < half; ++k) freq_energy += 2 * spec(0, k) * spec(0, k);
  freq_energy /= audio_params::kFrameLength;
  const double parseval = std::abs(freq_energy - time_energy) / time_energy;
  if (parseval > kParsevalRelTol) failures.push_back("parseval " + fmt("%.1e", parseval));

  std::string detail = "mfcc max " + fmt("%.1e", mfcc_max) + ", parseval rel " + fmt("%.1e", parseval);
  for (const auto& f : failures) detail += "; failed " + f;
  return {failures.empty(), detail};
}

// 4. Label harmonization table.
Outcome label_table_fidelity() {
  int cells = 0, wrong = 0;
  for (const auto& c : oracle::kLabelCells) {
    ++cells;
    if (emotion_name(map_label(c.dataset, c.label)) != c.emotion) ++wrong;
  }
  int rejected = 0;
  const std::pair<const char*, const char*> unknown[] = {
      {"ravdess", "bored"}, {"crema", "sur"}, {"tess", "calm"}, {"sav", "h"}, {"iemocap", "happy"}, {"emodb", "angry"}};
  for (const auto& [d, l] : unknown) {
    try {
      map_label(d, l);
    } catch (const MappingError&) {
      ++rejected;
    }
  }
  const int n_unknown = static_cast<int>(std::size(unknown));
  return {wrong == 0 && rejected == n_unknown,
          std::to_string(cells - wrong) + "/" + std::to_string(cells) + " cells, " + std::to_string(rejected) +
              "/" + std::to_string(n_unknown) + " unknown labels rejected"};
}

// 5. Pixel-only descent, twice, single-threaded.
Outcome end_to_end_descent() {
  const std::size_t saved = thread_count();
  set_thread_count(1);
  const CanvasConfig canvas{64, 64, {1.0, 1.0, 1.0}, 0.004};
  const PaintingPlan plan0 = init_plan(InitStrategy::kUniformRandom, 20, canvas, std::nullopt, 0);
  ObjectiveSpec spec;
  spec.encoders = EncoderSet::reference(0);
  spec.terms.push_back(ObjectiveTerm::pixel_l2(Image(64, 64, {0.2, 0.4, 0.8}), 1.0));
  OptimizerConfig cfg;
  cfg.iterations = 500;
  cfg.lr_geometry = 1e-2;
  cfg.lr_color = 5e-2;
  const OptimizationResult first = optimize(plan0, spec, cfg);
  const OptimizationResult second = optimize(plan0, spec, cfg);
  set_thread_count(saved);
  const double initial = first.loss_history.front(), final_loss = first.loss_history.back();
  const bool same = first.loss_history == second.loss_history && first.best_plan == second.best_plan &&
                    dump_plan(first.best_plan) == dump_plan(second.best_plan);
  return {final_loss <= kDescentRatio * initial && same,
          "initial " + fmt("%.4g", initial) + ", final " + fmt("%.4g", final_loss) + ", ratio " +
              fmt("%.4f", final_loss / initial) + (same ? ", bitwise identical reruns" : ", reruns DIFFER")};
}

// 6. Weighted composition of the objective terms.
Outcome composition() {
  const CanvasConfig canvas{48, 48, {1.0, 1.0, 1.0}, 0.006};
  const PaintingPlan plan = init_plan(InitStrategy::kUniformRandom, 15, canvas, std::nullopt, 1);
  const FeatureStack sound = extract_features(AudioClip{oracle::sine(523.25, 1.0), 16000});
  SpeechClassifierWeights ser;
  Rng rng(6);
  for (double& v : ser.w1.data) v = rng.normal() / std::sqrt(double(ser_params::kInputs));
  for (double& v : ser.w2.data) v = rng.normal();
  const EmotionDistribution e_speech = speech_emotion(sound, ser);

  ObjectiveSpec base;
  base.encoders = EncoderSet::reference(0);
  base.augmentation.count = 4;
  base.augmentation.output_size_px = 32;

  std::string detail;
  bool ok = true;

  // Zero-weight terms leave value and gradient bitwise unchanged.
  ObjectiveSpec ns_only = base;
  ns_only.terms = {ObjectiveTerm::natural_sound(sound, 1.0)};
  ObjectiveSpec ns_padded = ns_only;
  ns_padded.terms.push_back(ObjectiveTerm::speech_text("a bright morning", 0.0));
  ns_padded.terms.push_back(ObjectiveTerm::pixel_l2(Image(48, 48), 0.0));
  ns_padded.terms.push_back(ObjectiveTerm::direct_emotion(one_hot(Emotion::kAwe), 0.0));
  const CompositeLoss plain = composite_loss(plan, ns_only, 3);
  const CompositeLoss padded = composite_loss(plan, ns_padded, 3);
  const bool noop = plain.total == padded.total && flatten(plain.gradient) == flatten(padded.gradient);
  ok = ok && noop;
  detail += noop ? "zero-weight no-op" : "zero-weight terms CHANGED the result";

  // Composite equals the weighted sum of its per-term values.
  ObjectiveSpec all = base;
  all.terms = {ObjectiveTerm::natural_sound(sound, 0.8), ObjectiveTerm::speech_text("a bright morning", 1.7),
               ObjectiveTerm::speech_emotion(e_speech, 0.6), ObjectiveTerm::pixel_l2(Image(48, 48, {0.5, 0.1, 0.3}), 2.5),
               ObjectiveTerm::direct_emotion(one_hot(Emotion::kContentment), 1.1)};
  const CompositeLoss c = composite_loss(plan, all, 9);
  double sum = 0.0;
  for (std::size_t i = 0; i < all.terms.size(); ++i) sum += all.terms[i].weight * c.term_values[i];
  const double gap = std::abs(c.total - sum);
  ok = ok && gap <= kCompositeSumTol;
  detail += ", sum gap " + fmt("%.1e", gap);

  // The sound-only and speech-only objectives each run 50 iterations.
  OptimizerConfig cfg;
  cfg.iterations = 50;
  ObjectiveSpec speech = base;
  speech.terms = {ObjectiveTerm::speech_text("a bright morning", 1.0), ObjectiveTerm::speech_emotion(e_speech, 1.0)};
  for (const auto& [name, spec] : {std::pair<const char*, const ObjectiveSpec&>{"L_NS", ns_only},
                                   std::pair<const char*, const ObjectiveSpec&>{"L_S", speech}}) {
    try {
      const OptimizationResult r = optimize(plan, spec, cfg);
      const bool ran = r.loss_history.size() == 50;
      ok = ok && ran;
      detail += std::string(", ") + name + " " + fmt("%.4f", r.loss_history.front()) + "->" +
                fmt("%.4f", r.best_loss);
    } catch (const NumericError& e) {
      ok = false;
      detail += std::string(", ") + name + " numeric error: " + e.what();
    }
  }
  return {ok, detail};
}

// 7. Speech classifier training on a separable two-class set.
Outcome classifier_training() {
  Rng rng(7);
  std::vector<double> direction(ser_params::kInputs);
  for (double& v : direction) v = rng.normal();
  std::vector<LabeledPooled> data;
  for (int i = 0; i < 200; ++i) {
    const bool positive = i % 2 == 0;
    std::vector<double> x(ser_params::kInputs);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.normal() + (positive ? 0.25 : -0.25) * direction[k];
    data.push_back({std::move(x), positive ? Emotion::kExcitement : Emotion::kSadness});
  }
  TrainingConfig cfg;
  cfg.epochs = kTrainingEpochs;
  const TrainingResult r = train_speech_classifier(std::span<const LabeledPooled>(data), cfg);

  double worst = 0.0;
  auto track = [&](const EmotionDistribution& p) {
    double total = 0.0;
    for (double v : p) {
      total += v;
      if (v < 0.0) worst = std::max(worst, -v);
    }
    worst = std::max(worst, std::abs(total - 1.0));
  };
  for (const auto& s : data) track(classify_pooled(s.pooled, r.weights));
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(ser_params::kInputs);
    for (double& v : x) v = rng.normal() * 1e3;
    track(classify_pooled(x, r.weights));
  }
  return {r.accuracy >= kAccuracyFloor && worst <= kSimplexTol,
          "accuracy " + fmt("%.3f", r.accuracy) + ", max simplex violation " + fmt("%.1e", worst)};
}

// 8. Serialization round trips.
Outcome round_trips() {
  oracle::TempDir dir("acceptance");
  Rng rng(8);
  PaintingPlan plan = init_plan(InitStrategy::kUniformRandom, 30, CanvasConfig{97, 61, {0.3, 0.6, 0.9}, 0.0037},
                                std::nullopt, 8);
  plan.strokes[0].x = 1.0 / 3.0;
  plan.strokes[1].bend = -0.0;
  plan.strokes[2].thickness = std::nextafter(0.05, 1.0);
  save_plan(plan, dir / "plan.json");
  const PaintingPlan back = load_plan(dir / "plan.json");
  bool plan_ok = back == plan;
  for (std::size_t i = 0; plan_ok && i < plan.strokes.size(); ++i) {
    plan_ok = std::signbit(back.strokes[i].bend) == std::signbit(plan.strokes[i].bend);
  }
  plan_ok = plan_ok && dump_plan(back) == dump_plan(plan);

  WeightFile wf;
  Matrix m(13, 7);
  for (double& v : m.data) v = rng.normal();
  wf.add("matrix", m);
  wf.add("vector", std::vector<double>{1e-30, -0.0, 3.5});
  wf.add(Tensor{"cube", {2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8}});
  save_weight_file(wf, dir / "w.synw");
  const WeightFile wback = load_weight_file(dir / "w.synw");
  const bool synw_ok = wback == wf && wback.serialize() == wf.serialize();

  Image img(41, 23);
  for (double& v : img.data()) v = rng.uniform();
  save_png(img, dir / "i.png");
  const Image pback = load_png(dir / "i.png");
  double png_err = 0.0;
  for (std::size_t i = 0; i < img.data().size(); ++i) png_err = std::max(png_err, std::abs(pback.data()[i] - img.data()[i]));
  const bool png_ok = pback.same_shape(img) && png_err <= kPngTol;

  return {plan_ok && synw_ok && png_ok, std::string("plan ") + (plan_ok ? "bitwise" : "MISMATCH") + ", SYNW1 " +
                                            (synw_ok ? "bitwise" : "MISMATCH") + ", png max err " +
                                            fmt("%.5f", png_err)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"renderer oracle", renderer_oracle},
      {"DSP oracles", dsp_oracles},
      {"label table", label_table_fidelity},
      {"end-to-end descent", end_to_end_descent},
      {"objective composition", composition},
      {"classifier training", classifier_training},
      {"round trips", round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %zu %-22s %s  (%s; %.1fs)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
