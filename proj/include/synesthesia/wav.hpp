#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace synesthesia {

inline constexpr int kCanonicalSampleRate = 16000;

/// Mono audio at the canonical 16 kHz rate, samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalSampleRate;
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Raw interleaved samples as stored in a WAV file, before canonicalization.
struct WavData {
  std::vector<std::vector<double>> channels;
  int sample_rate_hz = 0;
};

/// Parses a RIFF WAV file (PCM16 or IEEE float32, 1-2 channels).
WavData read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const WavData& wav, WavEncoding encoding);

/// Linear-interpolation resampling; output length round(n * to / from).
std::vector<double> resample_linear(std::span<const double> samples, int from_hz, int to_hz);

/// read_wav, then downmix by channel mean and resample to 16 kHz.
AudioClip decode_wav(const std::filesystem::path& path);

}  // namespace synesthesia
