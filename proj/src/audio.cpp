#include "synesthesia/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "synesthesia/error.hpp"

namespace synesthesia {

using namespace audio_params;
using std::numbers::pi;

std::size_t frame_count(std::size_t n_samples) {
  if (n_samples == 0) return 0;
  return (n_samples - 1) / kHop + 1;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * i / n);
  return w;
}

namespace {

// FFTW planning is not thread-safe; execution of a finished plan is.
std::mutex g_fftw_mutex;

struct FftwPlan {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  FftwPlan() {
    std::lock_guard lock(g_fftw_mutex);
    in = fftw_alloc_real(kFrameLength);
    out = fftw_alloc_complex(kBins);
    plan = fftw_plan_dft_r2c_1d(kFrameLength, in, out, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    std::lock_guard lock(g_fftw_mutex);
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace

Matrix stft_magnitude(const AudioClip& clip) {
  const std::size_t len = clip.samples.size();
  if (len < static_cast<std::size_t>(kFrameLength)) {
    throw ParameterError("stft: clip has " + std::to_string(len) + " samples, need >= " +
                         std::to_string(kFrameLength));
  }
  static const std::vector<double> window = hann_window(kFrameLength);
  const std::size_t frames = frame_count(len);
  Matrix out(frames, kBins);
  FftwPlan fft;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * kHop;
    for (int n = 0; n < kFrameLength; ++n) {
      const std::size_t i = start + n;
      fft.in[n] = i < len ? clip.samples[i] * window[n] : 0.0;
    }
    fftw_execute(fft.plan);
    for (int k = 0; k < kBins; ++k) out(f, k) = std::hypot(fft.out[k][0], fft.out[k][1]);
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double mel_band_center_hz(int k) {
  const double step = hz_to_mel(kMelMaxHz) / (kMelBands + 1);
  return mel_to_hz(step * (k + 1));
}

const Matrix& mel_filterbank() {
  static const Matrix bank = [] {
    Matrix m(kMelBands, kBins);
    const double step = hz_to_mel(kMelMaxHz) / (kMelBands + 1);
    const double bin_hz = static_cast<double>(kCanonicalSampleRate) / kFrameLength;
    for (int band = 0; band < kMelBands; ++band) {
      const double lo = mel_to_hz(step * band);
      const double mid = mel_to_hz(step * (band + 1));
      const double hi = mel_to_hz(step * (band + 2));
      for (int k = 0; k < kBins; ++k) {
        const double f = k * bin_hz;
        double w = 0.0;
        if (f > lo && f <= mid) {
          w = (f - lo) / (mid - lo);
        } else if (f > mid && f < hi) {
          w = (hi - f) / (hi - mid);
        }
        m(band, k) = w;
      }
    }
    return m;
  }();
  return bank;
}

Matrix mel_spectrogram(const Matrix& stft) {
  if (stft.cols != static_cast<std::size_t>(kBins)) {
    throw ParameterError("mel_spectrogram: expected 513 bins, got " + std::to_string(stft.cols));
  }
  const Matrix& bank = mel_filterbank();
  Matrix out(stft.rows, kMelBands);
  std::vector<double> power(kBins);
  for (std::size_t f = 0; f < stft.rows; ++f) {
    for (int k = 0; k < kBins; ++k) power[k] = stft(f, k) * stft(f, k);
    const auto energies = matvec(bank, power);
    for (int b = 0; b < kMelBands; ++b) out(f, b) = std::log(std::max(energies[b], kLogFloor));
  }
  return out;
}

Matrix dct2_matrix(int n) {
  Matrix m(n, n);
  for (int k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i) m(k, i) = scale * std::cos(pi * k * (2 * i + 1) / (2.0 * n));
  }
  return m;
}

Matrix mfcc(const Matrix& log_mel) {
  if (log_mel.cols != static_cast<std::size_t>(kMelBands)) {
    throw ParameterError("mfcc: expected 64 mel bands, got " + std::to_string(log_mel.cols));
  }
  static const Matrix basis = dct2_matrix(kMelBands);
  Matrix out(log_mel.rows, kMfccCount);
  for (std::size_t f = 0; f < log_mel.rows; ++f) {
    for (int k = 0; k < kMfccCount; ++k) {
      double acc = 0.0;
      for (int b = 0; b < kMelBands; ++b) acc += basis(k, b) * log_mel(f, b);
      out(f, k) = acc;
    }
  }
  return out;
}

int pitch_class(double hz) {
  if (!(hz >= kChromaMinHz)) return -1;
  const long semitones = std::lround(12.0 * std::log2(hz / 440.0));
  return static_cast<int>(((semitones % 12) + 12) % 12);
}

Matrix chromagram(const Matrix& stft) {
  if (stft.cols != static_cast<std::size_t>(kBins)) {
    throw ParameterError("chromagram: expected 513 bins, got " + std::to_string(stft.cols));
  }
  static const std::vector<int> classes = [] {
    std::vector<int> pc(kBins);
    const double bin_hz = static_cast<double>(kCanonicalSampleRate) / kFrameLength;
    for (int k = 0; k < kBins; ++k) pc[k] = pitch_class(k * bin_hz);
    return pc;
  }();
  Matrix out(stft.rows, kChromaClasses);
  for (std::size_t f = 0; f < stft.rows; ++f) {
    double total = 0.0;
    for (int k = 0; k < kBins; ++k) {
      if (classes[k] < 0) continue;
      const double p = stft(f, k) * stft(f, k);
      out(f, classes[k]) += p;
      total += p;
    }
    if (total > 0.0) {
      for (int c = 0; c < kChromaClasses; ++c) out(f, c) /= total;
    }
  }
  return out;
}

FeatureStack extract_features(const AudioClip& clip) {
  const Matrix stft = stft_magnitude(clip);
  FeatureStack fs;
  fs.mel = mel_spectrogram(stft);
  fs.mfcc = mfcc(fs.mel);
  fs.chroma = chromagram(stft);
  return fs;
}

}  // namespace synesthesia
