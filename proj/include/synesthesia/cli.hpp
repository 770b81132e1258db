#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "synesthesia/canvas.hpp"
#include "synesthesia/objective.hpp"
#include "synesthesia/strokes.hpp"

namespace synesthesia {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitNumeric = 4,
};

/// Per-term weights. A term only participates when its input is configured.
struct TermWeights {
  double natural_sound = 1.0;
  double speech_text = 1.0;
  double speech_emotion = 1.0;
  double pixel_l2 = 1.0;
  double direct_emotion = 1.0;
};

/// Paint job description, parsed from JSON with every default filled in.
///
/// Objective inputs and the terms they enable:
///   wav_path                        -> natural_sound
///   transcript | transcript_path    -> speech_text (transcribe externally)
///   wav_path + ser_weights_path     -> speech_emotion
///   target_image_path               -> pixel_l2
///   emotion (canonical name)        -> direct_emotion
struct PaintConfig {
  CanvasConfig canvas{256, 256, {1.0, 1.0, 1.0}, 0.004};

  int stroke_count = 100;
  InitStrategy init = InitStrategy::kUniformRandom;
  std::uint64_t init_seed = 0;

  std::optional<std::filesystem::path> wav_path;
  std::optional<std::string> transcript;
  std::optional<std::filesystem::path> transcript_path;
  std::optional<std::filesystem::path> ser_weights_path;
  std::optional<std::filesystem::path> emotion_head_path;
  std::optional<std::filesystem::path> target_image_path;
  std::optional<std::string> emotion;
  TermWeights weights;
  AugmentationSpec augmentation;
  std::uint64_t objective_seed = 0;

  OptimizerConfig optimizer;

  std::size_t encoder_dim = kDefaultEmbeddingDim;
  std::uint64_t encoder_seed = 0;
  std::optional<std::filesystem::path> encoder_weight_file;

  std::optional<std::filesystem::path> output_dir;

  /// Relative paths are resolved against `base_dir` (the config's folder).
  /// Throws ConfigError on unknown keys, wrong types, invalid values, or
  /// referenced files that do not exist.
  static PaintConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static PaintConfig load(const std::filesystem::path& path);

  /// Fully resolved form, suitable for from_json.
  nlohmann::json to_json() const;
};

/// Loads every configured input and assembles the objective.
ObjectiveSpec build_objective(const PaintConfig& config);

void cmd_paint(const std::filesystem::path& config_path,
               const std::optional<std::filesystem::path>& out_dir, std::ostream& log);
void cmd_render(const std::filesystem::path& plan_path, const std::filesystem::path& out_png);
void cmd_features(const std::filesystem::path& wav, const std::filesystem::path& out_json);
void cmd_emotion(const std::filesystem::path& wav, const std::filesystem::path& weights,
                 const std::filesystem::path& out_json);
/// Prints one line per component; returns false if any exceeded tolerance.
bool cmd_gradcheck(std::uint64_t seed, const std::string& corrupt, std::ostream& out,
                   int configs = 100);

/// Maps an in-flight exception to its exit code.
int exit_code_for(const std::exception& e);

/// Parses arguments, dispatches, and converts errors to exit codes after
/// printing them to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace synesthesia
