#include "synesthesia/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "synesthesia/audio.hpp"
#include "synesthesia/emotion.hpp"
#include "synesthesia/encoders.hpp"
#include "synesthesia/error.hpp"
#include "synesthesia/gradcheck.hpp"
#include "synesthesia/plan_io.hpp"
#include "synesthesia/wav.hpp"
#include "synesthesia/weight_file.hpp"

namespace synesthesia {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be a JSON object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number() || !std::isfinite(v->get<double>())) {
        throw ConfigError(where(key) + " must be a finite number");
      }
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      out = v->get<int>();
    }
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void text(const std::string& key, std::optional<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  /// Resolves against `base` and requires the file to exist.
  void existing_file(const std::string& key, const fs::path& base, std::optional<fs::path>& out) {
    std::optional<std::string> raw;
    text(key, raw);
    if (!raw) return;
    const fs::path p = fs::path(*raw).is_absolute() ? fs::path(*raw) : base / *raw;
    if (!fs::is_regular_file(p)) {
      throw ConfigError(where(key) + ": file not found: " + p.string());
    }
    out = p;
  }

  void rgb(const std::string& key, Rgb& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 3) throw ConfigError(where(key) + " must be [r, g, b]");
      for (std::size_t c = 0; c < 3; ++c) {
        const json& x = (*v)[c];
        if (!x.is_number() || !(x.get<double>() >= 0.0 && x.get<double>() <= 1.0)) {
          throw ConfigError(where(key) + " entries must be numbers in [0, 1]");
        }
        out[c] = x.get<double>();
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key " + where(key));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void for_section(Section& parent, const std::string& key, const std::function<void(Section&)>& body) {
  if (const json* v = parent.find(key)) {
    Section s(*v, parent.where(key));
    body(s);
    s.finish();
  }
}

const char* init_name(InitStrategy s) {
  return s == InitStrategy::kImageSeeded ? "image-seeded" : "uniform-random";
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << content;
  if (!f.flush()) throw IoError("write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

PaintConfig PaintConfig::from_json(const json& j, const fs::path& base_dir) {
  PaintConfig c;
  Section root(j, "config");
  for_section(root, "canvas", [&](Section& s) {
    s.integer("width_px", c.canvas.width_px);
    s.integer("height_px", c.canvas.height_px);
    s.rgb("background_rgb", c.canvas.background);
  });
  for_section(root, "strokes", [&](Section& s) {
    s.integer("count", c.stroke_count);
    std::optional<std::string> init;
    s.text("init", init);
    if (init) {
      if (*init == "uniform-random") {
        c.init = InitStrategy::kUniformRandom;
      } else if (*init == "image-seeded") {
        c.init = InitStrategy::kImageSeeded;
      } else {
        throw ConfigError(s.where("init") + " must be uniform-random or image-seeded, got " + *init);
      }
    }
    s.number("softness", c.canvas.softness);
    s.seed("seed", c.init_seed);
  });
  for_section(root, "objective", [&](Section& s) {
    s.existing_file("wav_path", base_dir, c.wav_path);
    s.text("transcript", c.transcript);
    s.existing_file("transcript_path", base_dir, c.transcript_path);
    s.existing_file("ser_weights_path", base_dir, c.ser_weights_path);
    s.existing_file("emotion_head_path", base_dir, c.emotion_head_path);
    s.existing_file("target_image_path", base_dir, c.target_image_path);
    s.text("emotion", c.emotion);
    for_section(s, "weights", [&](Section& w) {
      w.number("natural_sound", c.weights.natural_sound);
      w.number("speech_text", c.weights.speech_text);
      w.number("speech_emotion", c.weights.speech_emotion);
      w.number("pixel_l2", c.weights.pixel_l2);
      w.number("direct_emotion", c.weights.direct_emotion);
    });
    for_section(s, "augmentation", [&](Section& a) {
      a.integer("count", c.augmentation.count);
      a.number("min_crop_fraction", c.augmentation.min_crop_fraction);
      a.number("max_corner_jitter_fraction", c.augmentation.max_corner_jitter_fraction);
      a.integer("output_size_px", c.augmentation.output_size_px);
      a.seed("seed", c.augmentation.seed);
    });
    s.seed("seed", c.objective_seed);
  });
  for_section(root, "optimizer", [&](Section& s) {
    s.integer("iterations", c.optimizer.iterations);
    s.number("lr_geometry", c.optimizer.lr_geometry);
    s.number("lr_color", c.optimizer.lr_color);
    s.number("beta1", c.optimizer.beta1);
    s.number("beta2", c.optimizer.beta2);
    s.number("epsilon", c.optimizer.epsilon);
    s.seed("seed", c.optimizer.seed);
  });
  for_section(root, "encoder", [&](Section& s) {
    int dim = static_cast<int>(c.encoder_dim);
    s.integer("dim", dim);
    if (dim < 1) throw ConfigError(s.where("dim") + " must be >= 1");
    c.encoder_dim = static_cast<std::size_t>(dim);
    s.seed("seed", c.encoder_seed);
    s.existing_file("weight_file", base_dir, c.encoder_weight_file);
  });
  for_section(root, "outputs", [&](Section& s) {
    std::optional<std::string> dir;
    s.text("dir", dir);
    if (dir) c.output_dir = fs::path(*dir).is_absolute() ? fs::path(*dir) : base_dir / *dir;
  });
  root.finish();

  if (c.canvas.width_px < 1 || c.canvas.height_px < 1) {
    throw ConfigError("config.canvas dimensions must be >= 1");
  }
  if (!(c.canvas.softness > 0.0)) throw ConfigError("config.strokes.softness must be > 0");
  if (c.stroke_count < 1) throw ConfigError("config.strokes.count must be >= 1");
  if (c.transcript && c.transcript_path) {
    throw ConfigError("config.objective: give transcript or transcript_path, not both");
  }
  if (c.ser_weights_path && !c.wav_path) {
    throw ConfigError("config.objective.ser_weights_path needs wav_path");
  }
  if (c.emotion && !emotion_from_name(*c.emotion)) {
    throw ConfigError("config.objective.emotion: unknown emotion " + *c.emotion);
  }
  if (c.init == InitStrategy::kImageSeeded && !c.target_image_path) {
    throw ConfigError("config.strokes.init image-seeded needs objective.target_image_path");
  }
  if (!c.wav_path && !c.transcript && !c.transcript_path && !c.target_image_path && !c.emotion) {
    throw ConfigError("config.objective configures no inputs");
  }
  for (double w : {c.weights.natural_sound, c.weights.speech_text, c.weights.speech_emotion,
                   c.weights.pixel_l2, c.weights.direct_emotion}) {
    if (w < 0.0) throw ConfigError("config.objective.weights must be >= 0");
  }
  try {
    c.augmentation.validate();
    c.optimizer.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

PaintConfig PaintConfig::load(const fs::path& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

json PaintConfig::to_json() const {
  json j;
  j["canvas"] = {{"width_px", canvas.width_px},
                 {"height_px", canvas.height_px},
                 {"background_rgb", canvas.background}};
  j["strokes"] = {{"count", stroke_count},
                  {"init", init_name(init)},
                  {"softness", canvas.softness},
                  {"seed", init_seed}};
  json obj = json::object();
  if (wav_path) obj["wav_path"] = wav_path->string();
  if (transcript) obj["transcript"] = *transcript;
  if (transcript_path) obj["transcript_path"] = transcript_path->string();
  if (ser_weights_path) obj["ser_weights_path"] = ser_weights_path->string();
  if (emotion_head_path) obj["emotion_head_path"] = emotion_head_path->string();
  if (target_image_path) obj["target_image_path"] = target_image_path->string();
  if (emotion) obj["emotion"] = *emotion;
  obj["weights"] = {{"natural_sound", weights.natural_sound},
                    {"speech_text", weights.speech_text},
                    {"speech_emotion", weights.speech_emotion},
                    {"pixel_l2", weights.pixel_l2},
                    {"direct_emotion", weights.direct_emotion}};
  obj["augmentation"] = {{"count", augmentation.count},
                         {"min_crop_fraction", augmentation.min_crop_fraction},
                         {"max_corner_jitter_fraction", augmentation.max_corner_jitter_fraction},
                         {"output_size_px", augmentation.output_size_px},
                         {"seed", augmentation.seed}};
  obj["seed"] = objective_seed;
  j["objective"] = obj;
  j["optimizer"] = {{"iterations", optimizer.iterations}, {"lr_geometry", optimizer.lr_geometry},
                    {"lr_color", optimizer.lr_color},     {"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2},           {"epsilon", optimizer.epsilon},
                    {"seed", optimizer.seed}};
  json enc = {{"dim", encoder_dim}, {"seed", encoder_seed}};
  if (encoder_weight_file) enc["weight_file"] = encoder_weight_file->string();
  j["encoder"] = enc;
  j["outputs"] = json::object();
  if (output_dir) j["outputs"]["dir"] = output_dir->string();
  return j;
}

ObjectiveSpec build_objective(const PaintConfig& c) {
  ObjectiveSpec spec;
  spec.augmentation = c.augmentation;
  spec.seed = c.objective_seed;

  // Tensors present in the encoder weight file replace the matching seeded
  // reference encoder; absent ones fall back to it.
  const EncoderSet reference = EncoderSet::reference(c.encoder_seed, c.encoder_dim);
  spec.encoders = reference;
  if (c.encoder_weight_file) {
    const WeightFile wf = load_weight_file(*c.encoder_weight_file);
    if (wf.contains("image_proj")) {
      spec.encoders.image = std::make_shared<ProjectionImageEncoder>(wf, c.encoder_dim);
    }
    if (wf.contains("audio_proj")) {
      spec.encoders.audio = std::make_shared<ProjectionAudioEncoder>(wf, c.encoder_dim);
    }
    if (wf.contains("text_proj")) {
      spec.encoders.text = std::make_shared<TrigramTextEncoder>(wf, c.encoder_dim);
    }
  }
  if (c.emotion_head_path) {
    spec.encoders.emotion_head =
        EmotionHead::from_weight_file(load_weight_file(*c.emotion_head_path), c.encoder_dim);
  }

  if (c.wav_path) {
    const FeatureStack features = extract_features(decode_wav(*c.wav_path));
    spec.terms.push_back(ObjectiveTerm::natural_sound(features, c.weights.natural_sound));
    if (c.transcript || c.transcript_path) {
      spec.terms.push_back(ObjectiveTerm::speech_text(
          c.transcript ? *c.transcript : read_text(*c.transcript_path), c.weights.speech_text));
    }
    if (c.ser_weights_path) {
      const auto ser = SpeechClassifierWeights::from_weight_file(load_weight_file(*c.ser_weights_path));
      spec.terms.push_back(
          ObjectiveTerm::speech_emotion(speech_emotion(features, ser), c.weights.speech_emotion));
    }
  } else if (c.transcript || c.transcript_path) {
    spec.terms.push_back(ObjectiveTerm::speech_text(
        c.transcript ? *c.transcript : read_text(*c.transcript_path), c.weights.speech_text));
  }
  if (c.target_image_path) {
    CanvasImage target = load_png(*c.target_image_path);
    if (target.width() != c.canvas.width_px || target.height() != c.canvas.height_px) {
      target = resize_bilinear(target, c.canvas.width_px, c.canvas.height_px);
    }
    spec.terms.push_back(ObjectiveTerm::pixel_l2(std::move(target), c.weights.pixel_l2));
  }
  if (c.emotion) {
    spec.terms.push_back(
        ObjectiveTerm::direct_emotion(one_hot(*emotion_from_name(*c.emotion)), c.weights.direct_emotion));
  }
  return spec;
}

void cmd_paint(const fs::path& config_path, const std::optional<fs::path>& out_dir, std::ostream& log) {
  PaintConfig config = PaintConfig::load(config_path);
  if (out_dir) config.output_dir = *out_dir;
  if (!config.output_dir) throw ConfigError("no output directory: set outputs.dir or pass --out-dir");

  const ObjectiveSpec spec = build_objective(config);
  std::optional<CanvasImage> target;
  for (const auto& term : spec.terms) {
    if (term.kind == TermKind::kPixelL2) target = std::get<CanvasImage>(term.payload);
  }
  const PaintingPlan plan0 =
      init_plan(config.init, config.stroke_count, config.canvas, target, config.init_seed);

  const int every = std::max(1, config.optimizer.iterations / 10);
  const OptimizationResult result =
      optimize(plan0, spec, config.optimizer, [&](int t, double loss) {
        if (t % every == 0 || t + 1 == config.optimizer.iterations) {
          log << "iter " << t << " loss " << format_double(loss) << "\n";
        }
      });

  const fs::path dir = *config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  save_plan(result.best_plan, dir / "plan.json");
  save_png(render_plan(result.best_plan), dir / "painting.png");

  std::string csv = "iteration,total";
  for (const auto& term : spec.terms) csv += std::string(",") + term_name(term.kind);
  csv += "\n";
  for (std::size_t t = 0; t < result.loss_history.size(); ++t) {
    csv += std::to_string(t) + "," + format_double(result.loss_history[t]);
    for (double v : result.term_history[t]) csv += "," + format_double(v);
    csv += "\n";
  }
  write_text(dir / "loss.csv", csv);

  json terms = json::array();
  for (const auto& term : spec.terms) {
    terms.push_back({{"name", term_name(term.kind)}, {"weight", term.weight}});
  }
  json meta = {
      {"version", kVersion},
      {"config", config.to_json()},
      {"config_path", config_path.string()},
      {"terms", terms},
      {"seeds",
       {{"init", config.init_seed},
        {"objective", config.objective_seed},
        {"augmentation", config.augmentation.seed},
        {"optimizer", config.optimizer.seed},
        {"encoder", config.encoder_seed}}},
      {"best_iteration", result.best_iteration},
      {"best_loss", result.best_loss},
      {"initial_loss", result.loss_history.front()},
      {"iterations_run", result.loss_history.size()},
  };
  write_text(dir / "meta.json", meta.dump(2) + "\n");
  log << "best loss " << format_double(result.best_loss) << " at iteration " << result.best_iteration
      << "; wrote " << dir.string() << "\n";
}

void cmd_render(const fs::path& plan_path, const fs::path& out_png) {
  save_png(render_plan(load_plan(plan_path)), out_png);
}

void cmd_features(const fs::path& wav, const fs::path& out_json) {
  const FeatureStack fs = extract_features(decode_wav(wav));
  const json j = {{"mel", matrix_json(fs.mel)},
                  {"mfcc", matrix_json(fs.mfcc)},
                  {"chroma", matrix_json(fs.chroma)},
                  {"n_frames", fs.n_frames()}};
  write_text(out_json, j.dump() + "\n");
}

void cmd_emotion(const fs::path& wav, const fs::path& weights, const fs::path& out_json) {
  const AudioClip clip = decode_wav(wav);
  const auto w = SpeechClassifierWeights::from_weight_file(load_weight_file(weights));
  const EmotionDistribution p = speech_emotion(extract_features(clip), w);
  const json j = {{"probs", p}, {"argmax", std::string(emotion_name(argmax(p)))}};
  write_text(out_json, j.dump(2) + "\n");
}

bool cmd_gradcheck(std::uint64_t seed, const std::string& corrupt, std::ostream& out, int configs) {
  GradcheckOptions opt;
  opt.seed = seed;
  opt.configs = configs;
  opt.corrupt_component = corrupt;
  const GradcheckReport report = run_gradcheck(opt);
  for (const auto& c : report.components) {
    char line[160];
    std::snprintf(line, sizeof line, "%-20s max_rel_err %.3e  tol %.0e  checks %ld  %s\n",
                  c.name.c_str(), c.max_relative_error, c.tolerance, c.checks,
                  c.passed ? "PASS" : "FAIL");
    out << line;
  }
  return report.all_passed();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const Error*>(&e)) return kExitUsage;
  return kExitUnexpected;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sound- and speech-guided brush-stroke painting planner", "synesthesia"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  fs::path config_path, plan_path, out_path, wav_path, weights_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string corrupt;
  int configs = GradcheckOptions{}.configs;

  auto* paint = app.add_subcommand("paint", "Optimize a stroke plan for the configured objective");
  paint->add_option("--config", config_path, "Paint config JSON")->required();
  paint->add_option("--out-dir", out_dir, "Output directory (overrides outputs.dir)");

  auto* render = app.add_subcommand("render", "Render a plan JSON to PNG");
  render->add_option("--plan", plan_path, "Plan JSON")->required();
  render->add_option("--out", out_path, "Output PNG")->required();

  auto* features = app.add_subcommand("features", "Extract mel/MFCC/chroma features from a WAV");
  features->add_option("--wav", wav_path, "Input WAV")->required();
  features->add_option("--out", out_path, "Output JSON")->required();

  auto* emotion = app.add_subcommand("emotion", "Classify speech emotion in a WAV");
  emotion->add_option("--wav", wav_path, "Input WAV")->required();
  emotion->add_option("--weights", weights_path, "Classifier weights (SYNW1)")->required();
  emotion->add_option("--out", out_path, "Output JSON")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  gradcheck->add_option("--seed", seed, "Seed for the random configurations");
  gradcheck->add_option("--corrupt", corrupt)->group("");
  gradcheck->add_option("--configs", configs)->check(CLI::PositiveNumber)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*paint) {
      cmd_paint(config_path, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir), out);
    } else if (*render) {
      cmd_render(plan_path, out_path);
    } else if (*features) {
      cmd_features(wav_path, out_path);
    } else if (*emotion) {
      cmd_emotion(wav_path, weights_path, out_path);
    } else if (*gradcheck) {
      if (!corrupt.empty()) {
        const auto& names = gradcheck_components();
        if (corrupt != "all" && std::find(names.begin(), names.end(), corrupt) == names.end()) {
          throw ParameterError("--corrupt: unknown component " + corrupt);
        }
      }
      return cmd_gradcheck(seed, corrupt, out, configs) ? kExitOk : kExitNumeric;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace synesthesia
