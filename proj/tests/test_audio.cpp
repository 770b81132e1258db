#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "synesthesia/audio.hpp"
#include "synesthesia/error.hpp"
#include "synesthesia/rng.hpp"

using namespace synesthesia;
namespace ap = synesthesia::audio_params;

namespace {

AudioClip clip_of(std::vector<double> samples) { return AudioClip{std::move(samples), 16000}; }

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("frame count") {
  CHECK(frame_count(16000) == 63);
  CHECK(frame_count(1024) == 4);
  CHECK(frame_count(1) == 1);
  CHECK(frame_count(257) == 2);
  CHECK(stft_magnitude(clip_of(std::vector<double>(16000))).rows == 63);
}

TEST_CASE("stft rejects clips shorter than one frame") {
  CHECK_THROWS_AS(stft_magnitude(clip_of(std::vector<double>(1023))), ParameterError);
}

TEST_CASE("hann window") {
  const auto w = hann_window(1024);
  const auto ref = oracle::hann(1024);
  for (int i = 0; i < 1024; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-14));
  CHECK(w[0] == 0.0);
  CHECK(w[512] == doctest::Approx(1.0));
}

TEST_CASE("stft matches a naive DFT of the windowed frames") {
  Rng rng(3);
  std::vector<double> x(3000);
  for (double& v : x) v = rng.uniform(-1, 1);
  const Matrix s = stft_magnitude(clip_of(x));
  const auto w = oracle::hann(1024);
  for (std::size_t f : {std::size_t{0}, std::size_t{5}, s.rows - 1}) {
    std::vector<double> frame(1024, 0.0);
    for (std::size_t n = 0; n < 1024; ++n) {
      const std::size_t i = f * 256 + n;
      if (i < x.size()) frame[n] = x[i] * w[n];
    }
    const auto ref = oracle::dft_magnitude(frame);
    for (int k = 0; k < ap::kBins; ++k) CHECK(s(f, k) == doctest::Approx(ref[k]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("Parseval holds for each frame") {
  Rng rng(4);
  std::vector<double> x(2048);
  for (double& v : x) v = rng.normal() * 0.2;
  const Matrix s = stft_magnitude(clip_of(x));
  const auto w = oracle::hann(1024);
  for (std::size_t f = 0; f < s.rows; ++f) {
    double time_energy = 0.0;
    for (std::size_t n = 0; n < 1024; ++n) {
      const std::size_t i = f * 256 + n;
      if (i < x.size()) time_energy += std::pow(x[i] * w[n], 2);
    }
    double freq_energy = s(f, 0) * s(f, 0) + s(f, 512) * s(f, 512);
    for (int k = 1; k < 512; ++k) freq_energy += 2 * s(f, k) * s(f, k);
    CHECK(freq_energy / 1024 == doctest::Approx(time_energy).epsilon(1e-10));
  }
}

TEST_CASE("a 1 kHz tone peaks in bin 64") {
  const Matrix s = stft_magnitude(clip_of(oracle::sine(1000, 1.0)));
  for (std::size_t f = 0; f + 4 < s.rows; ++f) CHECK(argmax(s.row(f)) == 64);
}

TEST_CASE("mel scale and filterbank") {
  CHECK(hz_to_mel(0) == 0.0);
  CHECK(hz_to_mel(700) == doctest::Approx(2595 * std::log10(2.0)));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
  const Matrix& bank = mel_filterbank();
  REQUIRE(bank.rows == 64);
  REQUIRE(bank.cols == 513);
  for (std::size_t b = 0; b < bank.rows; ++b) {
    double peak = 0.0;
    for (double v : bank.row(b)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      peak = std::max(peak, v);
    }
    CHECK(peak > 0.0);
  }
  // The top band closes at 8 kHz, up to rounding in the mel round trip.
  for (std::size_t b = 0; b < bank.rows; ++b) CHECK(bank(b, 512) < 1e-12);
  for (int k = 1; k < 63; ++k) CHECK(mel_band_center_hz(k) > mel_band_center_hz(k - 1));
  CHECK(mel_band_center_hz(63) < 8000.0);
}

TEST_CASE("mel band of a pure tone") {
  for (double hz : {300.0, 1000.0, 2500.0, 6000.0}) {
    const FeatureStack fs = extract_features(clip_of(oracle::sine(hz, 0.5)));
    const std::size_t band = argmax(fs.mel.row(10));
    CHECK(std::abs(std::log(mel_band_center_hz(int(band)) / hz)) < 0.1);
  }
}

TEST_CASE("silence hits the log floor everywhere") {
  const FeatureStack fs = extract_features(clip_of(std::vector<double>(16000)));
  CHECK(fs.n_frames() == 63);
  for (double v : fs.mel.data) CHECK(v == doctest::Approx(std::log(ap::kLogFloor)));
  for (double v : fs.chroma.data) CHECK(v == 0.0);
}

TEST_CASE("mfcc is the orthonormal DCT of the log-mel rows") {
  Rng rng(5);
  Matrix log_mel(3, 64);
  for (double& v : log_mel.data) v = rng.uniform(-20, 3);
  const Matrix m = mfcc(log_mel);
  REQUIRE(m.cols == 20);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto row = log_mel.row(f);
    const auto ref = oracle::dct2(std::vector<double>(row.begin(), row.end()));
    for (int k = 0; k < 20; ++k) CHECK(m(f, k) == doctest::Approx(ref[k]).epsilon(1e-12).scale(1.0));
  }
  Matrix flat(1, 64, -4.0);
  const Matrix c = mfcc(flat);
  CHECK(c(0, 0) == doctest::Approx(-4.0 * 8.0));
  for (int k = 1; k < 20; ++k) CHECK(std::abs(c(0, k)) < 1e-12);
  CHECK_THROWS_AS(mfcc(Matrix(1, 63)), ParameterError);
}

TEST_CASE("pitch classes") {
  CHECK(pitch_class(440.0) == 0);
  CHECK(pitch_class(880.0) == 0);
  CHECK(pitch_class(261.63) == 3);
  CHECK(pitch_class(466.16) == 1);
  CHECK(pitch_class(415.30) == 11);
  CHECK(pitch_class(20.0) == -1);
}

TEST_CASE("chroma of tones") {
  const FeatureStack a = extract_features(clip_of(oracle::sine(440, 1.0)));
  const FeatureStack c = extract_features(clip_of(oracle::sine(261.63, 1.0)));
  // Frames 0..59 hold at least 896 clip samples. The last three are mostly
  // zero padding and their peaks smear across neighbouring classes.
  for (std::size_t f = 0; f + 3 < a.n_frames(); ++f) {
    CHECK(argmax(a.chroma.row(f)) == 0);
    CHECK(argmax(c.chroma.row(f)) == 3);
    double total = 0.0;
    for (double v : a.chroma.row(f)) total += v;
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("wav round trip") {
  oracle::TempDir dir("wav");
  const auto tone = oracle::sine(440, 0.25, 0.7);
  WavData wav{{tone}, 16000};
  write_wav(dir / "a16.wav", wav, WavEncoding::kPcm16);
  write_wav(dir / "af.wav", wav, WavEncoding::kFloat32);
  const WavData pcm = read_wav(dir / "a16.wav");
  const WavData flt = read_wav(dir / "af.wav");
  REQUIRE(pcm.channels.size() == 1);
  REQUIRE(pcm.channels[0].size() == tone.size());
  CHECK(pcm.sample_rate_hz == 16000);
  for (std::size_t i = 0; i < tone.size(); ++i) {
    CHECK(std::abs(pcm.channels[0][i] - tone[i]) <= 0.5 / 32768 + 1e-12);
    CHECK(flt.channels[0][i] == static_cast<double>(static_cast<float>(tone[i])));
  }
}

TEST_CASE("decode downmixes stereo and resamples") {
  oracle::TempDir dir("wavmix");
  const std::size_t n = 44100;
  std::vector<double> left(n), right(n);
  for (std::size_t i = 0; i < n; ++i) {
    left[i] = 0.5 * std::sin(2 * std::numbers::pi * 4.0 * i / 44100.0);
    right[i] = 0.1;
  }
  write_wav(dir / "s.wav", WavData{{left, right}, 44100}, WavEncoding::kFloat32);
  const AudioClip clip = decode_wav(dir / "s.wav");
  CHECK(clip.sample_rate_hz == 16000);
  REQUIRE(clip.samples.size() == 16000);
  for (std::size_t i = 0; i < clip.samples.size(); i += 97) {
    const double expected = 0.5 * (0.5 * std::sin(2 * std::numbers::pi * 4.0 * i / 16000.0) + 0.1);
    CHECK(clip.samples[i] == doctest::Approx(expected).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("resampling") {
  const std::vector<double> ramp{0, 1, 2, 3};
  const auto up = resample_linear(ramp, 1, 2);
  REQUIRE(up.size() == 8);
  CHECK(up[1] == doctest::Approx(0.5));
  CHECK(up[7] == doctest::Approx(3.0));
  CHECK(resample_linear(ramp, 5, 5) == ramp);
  CHECK_THROWS_AS(resample_linear(ramp, 0, 5), ParameterError);
}

TEST_CASE("wav errors") {
  oracle::TempDir dir("waverr");
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), IoError);
  std::ofstream(dir / "junk.wav") << "RIFX0000WAVE";
  CHECK_THROWS_AS(read_wav(dir / "junk.wav"), FormatError);
  CHECK_THROWS_AS(write_wav(dir / "x.wav", WavData{{}, 16000}, WavEncoding::kPcm16), ParameterError);
}

}  // TEST_SUITE
