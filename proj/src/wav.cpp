#include "synesthesia/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "synesthesia/error.hpp"

namespace synesthesia {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file" + where);
  }

  std::uint16_t format = 0, n_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw FormatError("truncated WAV chunk" + where);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("short fmt chunk" + where);
      format = read_u16(chunk + 8);
      n_channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError("short extensible fmt chunk" + where);
        format = read_u16(chunk + 8 + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw FormatError("missing fmt chunk" + where);
  if (!data) throw FormatError("missing data chunk" + where);
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw FormatError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits)" + where);
  }
  if (n_channels < 1 || n_channels > 2) {
    throw FormatError("unsupported channel count " + std::to_string(n_channels) + where);
  }
  if (rate == 0) throw FormatError("zero sample rate" + where);
  const std::size_t frame_bytes = static_cast<std::size_t>(n_channels) * (bits / 8);
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw FormatError("empty data chunk" + where);

  WavData wav;
  wav.sample_rate_hz = static_cast<int>(rate);
  wav.channels.assign(n_channels, std::vector<double>(n_frames));
  for (std::size_t i = 0; i < n_frames; ++i) {
    for (std::size_t c = 0; c < n_channels; ++c) {
      const std::uint8_t* p = data + i * frame_bytes + c * (bits / 8);
      if (pcm16) {
        wav.channels[c][i] = static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        wav.channels[c][i] = std::bit_cast<float>(read_u32(p));
      }
    }
  }
  return wav;
}

void write_wav(const std::filesystem::path& path, const WavData& wav, WavEncoding encoding) {
  if (wav.channels.empty() || wav.channels.size() > 2) {
    throw ParameterError("write_wav: need 1 or 2 channels");
  }
  const std::size_t n = wav.channels[0].size();
  for (const auto& ch : wav.channels) {
    if (ch.size() != n) throw ParameterError("write_wav: channel lengths differ");
  }
  const std::uint16_t n_channels = static_cast<std::uint16_t>(wav.channels.size());
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint32_t data_size = static_cast<std::uint32_t>(n * n_channels * (bits / 8));
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, n_channels);
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate_hz) * n_channels * (bits / 8));
  put_u16(out, static_cast<std::uint16_t>(n_channels * (bits / 8)));
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_size);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& ch : wav.channels) {
      if (encoding == WavEncoding::kPcm16) {
        const double scaled = std::round(std::clamp(ch[i], -1.0, 1.0) * 32768.0);
        put_u16(out, static_cast<std::uint16_t>(
                         static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
      } else {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(ch[i])));
      }
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write WAV file: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing WAV file: " + path.string());
}

std::vector<double> resample_linear(std::span<const double> samples, int from_hz, int to_hz) {
  if (from_hz <= 0 || to_hz <= 0) throw ParameterError("resample: rates must be positive");
  if (samples.empty()) return {};
  if (from_hz == to_hz) return {samples.begin(), samples.end()};
  const std::size_t n_out = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(samples.size()) * to_hz / from_hz)));
  const double step = static_cast<double>(from_hz) / to_hz;
  const std::size_t last = samples.size() - 1;
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = i * step;
    const std::size_t i0 = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = std::min(pos - static_cast<double>(i0), 1.0);
    out[i] = (1.0 - frac) * samples[i0] + frac * samples[i1];
  }
  return out;
}

AudioClip decode_wav(const std::filesystem::path& path) {
  const WavData wav = read_wav(path);
  const std::size_t n = wav.channels[0].size();
  std::vector<double> mono(n, 0.0);
  for (const auto& ch : wav.channels) {
    for (std::size_t i = 0; i < n; ++i) mono[i] += ch[i];
  }
  const double inv = 1.0 / static_cast<double>(wav.channels.size());
  for (double& v : mono) v *= inv;
  AudioClip clip;
  clip.samples = resample_linear(mono, wav.sample_rate_hz, kCanonicalSampleRate);
  clip.sample_rate_hz = kCanonicalSampleRate;
  return clip;
}

}  // namespace synesthesia
