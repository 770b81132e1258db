#pragma once

#include <cstddef>

#include "synesthesia/matrix.hpp"
#include "synesthesia/wav.hpp"

namespace synesthesia {

namespace audio_params {
inline constexpr int kFrameLength = 1024;
inline constexpr int kHop = 256;
inline constexpr int kBins = kFrameLength / 2 + 1;  // 513
inline constexpr int kMelBands = 64;
inline constexpr int kMfccCount = 20;
inline constexpr int kChromaClasses = 12;
inline constexpr double kMelMaxHz = 8000.0;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kChromaMinHz = 32.0;
}  // namespace audio_params

struct FeatureStack {
  Matrix mel;     ///< n_frames x 64, natural-log mel power
  Matrix mfcc;    ///< n_frames x 20
  Matrix chroma;  ///< n_frames x 12, rows L1-normalized (or all zero)
  int frame_hop_samples = audio_params::kHop;
  int frame_length_samples = audio_params::kFrameLength;

  std::size_t n_frames() const { return mel.rows; }
  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;
};

/// Frames start at 0, 256, 512, ... up to the last start <= len - 1, so
/// n_frames = floor((len - 1) / 256) + 1. Frames running past the end are
/// zero-padded.
std::size_t frame_count(std::size_t n_samples);

/// Periodic Hann window: w[n] = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann_window(int n);

/// One-sided DFT magnitudes of Hann-windowed frames, n_frames x 513.
Matrix stft_magnitude(const AudioClip& clip);

/// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);
/// 64 x 513 triangular filterbank spanning 0..8000 Hz.
const Matrix& mel_filterbank();
/// Center frequency (Hz) of mel band k.
double mel_band_center_hz(int k);

Matrix mel_spectrogram(const Matrix& stft);

/// Orthonormal DCT-II basis, n x n (row k is the k-th cosine).
Matrix dct2_matrix(int n);

Matrix mfcc(const Matrix& log_mel);

/// Pitch class (0 = A) of a frequency, or -1 below 32 Hz.
int pitch_class(double hz);

Matrix chromagram(const Matrix& stft);

FeatureStack extract_features(const AudioClip& clip);

}  // namespace synesthesia
