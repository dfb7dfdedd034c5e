// roomforge/audio_io.hpp

// Copyright 2026  The roomforge authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "roomforge/dsp.hpp"
#include "roomforge/errors.hpp"

namespace roomforge {

class WavError : public IoError {
 public:
  using IoError::IoError;
};
class WavChannelError : public WavError {
 public:
  using WavError::WavError;
};
class WavCodecError : public WavError {
 public:
  using WavError::WavError;
};
class WavHeaderError : public WavError {
 public:
  using WavError::WavError;
};
class WavRangeError : public WavError {
 public:
  using WavError::WavError;
};

enum class SampleFormat { kInt16, kFloat32 };

struct WavSpec {
  int sample_rate = 16000;
  SampleFormat format = SampleFormat::kInt16;
  int channels = 1;
};

struct WavInfo {
  WavSpec spec;
  std::size_t frames = 0;
  double seconds() const { return static_cast<double>(frames) / spec.sample_rate; }
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

inline std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

struct ParsedWav {
  WavInfo info;
  std::size_t data_offset = 0;
  std::size_t data_bytes = 0;
};

// `total_size` is the full file length when `bytes` holds only a prefix.
inline ParsedWav parse_wav(std::span<const unsigned char> bytes, const std::string& name,
                           std::size_t total_size = 0) {
  if (total_size == 0) total_size = bytes.size();
  auto bad = [&](const std::string& why) -> WavHeaderError {
    return WavHeaderError(name + ": malformed WAV header: " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw bad("missing RIFF/WAVE signature");
  }
  ParsedWav out;
  bool have_fmt = false;
  bool have_data = false;
  int bits = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw bad("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      std::uint16_t tag = le16(f);
      const int channels = le16(f + 2);
      out.info.spec.sample_rate = static_cast<int>(le32(f + 4));
      bits = le16(f + 14);
      if (tag == 0xFFFE) {  // WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the tag
        if (size < 40) throw bad("truncated extensible fmt chunk");
        tag = le16(f + 24);
      }
      if (channels != 1) {
        throw WavChannelError(name + ": expected a mono file, found " + std::to_string(channels) +
                              " channels");
      }
      if (tag == 1 && bits == 16) out.info.spec.format = SampleFormat::kInt16;
      else if (tag == 3 && bits == 32) out.info.spec.format = SampleFormat::kFloat32;
      else {
        throw WavCodecError(name + ": unsupported codec (format tag " + std::to_string(tag) + ", " +
                            std::to_string(bits) + " bits); only 16-bit PCM and 32-bit float");
      }
      if (out.info.spec.sample_rate <= 0) throw bad("sample rate must be > 0");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw bad("data chunk before fmt chunk");
      out.data_offset = body;
      if (body + size > total_size) throw bad("truncated data chunk");
      out.data_bytes = size;
      have_data = true;
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw bad("missing fmt chunk");
  if (!have_data) throw bad("missing data chunk");
  const std::size_t width = static_cast<std::size_t>(bits / 8);
  if (out.data_bytes % width != 0) throw bad("data size is not a whole number of samples");
  out.info.frames = out.data_bytes / width;
  return out;
}

inline std::vector<unsigned char> slurp(const std::string& path, std::size_t limit = SIZE_MAX) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes;
  char buf[65536];
  while (bytes.size() < limit) {
    in.read(buf, sizeof buf);
    if (in.gcount() <= 0) break;
    bytes.insert(bytes.end(), buf, buf + in.gcount());
  }
  return bytes;
}

}  // namespace detail

/// Decodes an in-memory mono WAV file. 16-bit samples are divided by 32768.
inline AudioClip decode_wav(std::span<const unsigned char> bytes, const std::string& name) {
  const auto parsed = detail::parse_wav(bytes, name);
  AudioClip clip;
  clip.sample_rate = parsed.info.spec.sample_rate;
  clip.id = name;
  clip.samples.resize(parsed.info.frames);
  const unsigned char* data = bytes.data() + parsed.data_offset;
  if (parsed.info.spec.format == SampleFormat::kInt16) {
    for (std::size_t i = 0; i < parsed.info.frames; ++i) {
      const auto v = static_cast<std::int16_t>(detail::le16(data + 2 * i));
      clip.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else {
    for (std::size_t i = 0; i < parsed.info.frames; ++i) {
      const float f = std::bit_cast<float>(detail::le32(data + 4 * i));
      if (!std::isfinite(f)) throw WavRangeError(name + ": non-finite sample");
      clip.samples[i] = static_cast<double>(f);
    }
  }
  return clip;
}

/// Reads a mono 16-bit PCM or 32-bit float WAV. The clip id is the file stem.
inline AudioClip read_wav(const std::string& path) {
  AudioClip clip = decode_wav(detail::slurp(path), path);
  clip.id = std::filesystem::path(path).stem().string();
  return clip;
}

/// Header-only read: format and frame count without decoding samples.
inline WavInfo read_wav_info(const std::string& path) {
  const auto prefix = detail::slurp(path, 1 << 16);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat '" + path + "'");
  if (prefix.size() == size) return detail::parse_wav(prefix, path).info;
  try {
    return detail::parse_wav(prefix, path, static_cast<std::size_t>(size)).info;
  } catch (const WavHeaderError&) {
    // Chunks before "data" may be larger than the prefix.
    return detail::parse_wav(detail::slurp(path), path).info;
  }
}

/// 16-bit quantisation: round half away from zero of x * 32768, with +1.0
/// saturating to 32767.
inline std::int16_t quantize_s16(double x) {
  if (!(std::abs(x) <= 1.0)) throw WavRangeError("sample out of range for 16-bit PCM");
  const double scaled = std::round(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

inline std::vector<unsigned char> encode_wav(std::span<const double> samples, const WavSpec& spec) {
  if (spec.channels != 1) throw WavChannelError("only mono WAV output is supported");
  const bool pcm = spec.format == SampleFormat::kInt16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t block = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * block);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put32(out, 16);
  detail::put16(out, pcm ? 1 : 3);
  detail::put16(out, 1);
  detail::put32(out, static_cast<std::uint32_t>(spec.sample_rate));
  detail::put32(out, static_cast<std::uint32_t>(spec.sample_rate) * block);
  detail::put16(out, static_cast<std::uint16_t>(block));
  detail::put16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put32(out, data_bytes);
  for (double x : samples) {
    if (!std::isfinite(x)) throw WavRangeError("non-finite sample");
    if (pcm) {
      detail::put16(out, static_cast<std::uint16_t>(quantize_s16(x)));
    } else {
      detail::put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
  }
  return out;
}

inline void write_bytes(const std::string& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// Writes a mono RIFF/WAVE file (fmt + data chunks, little-endian).
inline void write_wav(const std::string& path, const AudioClip& clip, WavSpec spec) {
  spec.sample_rate = clip.sample_rate;
  write_bytes(path, encode_wav(clip.samples, spec));
}

namespace detail {

inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace detail

/// Passband edge (fraction of the lower sample rate) that resample keeps flat.
inline constexpr double kResampleCutoff = 0.45;
inline constexpr int kResampleZeroCrossings = 32;
inline constexpr double kResampleKaiserBeta = 8.6;

/// Polyphase windowed-sinc (Kaiser) rate conversion. Output length is
/// round(len * target / source).
inline AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.sample_rate <= 0 || target_rate <= 0) throw SignalError("resample: rates must be > 0");
  if (target_rate == clip.sample_rate) return clip;

  const long long g = std::gcd(static_cast<long long>(clip.sample_rate), static_cast<long long>(target_rate));
  const long long up = target_rate / g;
  const long long down = clip.sample_rate / g;
  const auto in_len = static_cast<long long>(clip.size());
  const long long out_len = (in_len * target_rate + clip.sample_rate / 2) / clip.sample_rate;

  // Filter in input-sample units. Cutoff as a fraction of the input rate.
  const double ratio = std::min(1.0, static_cast<double>(target_rate) / clip.sample_rate);
  const double fc = kResampleCutoff * ratio;  // cycles per input sample
  const int half = static_cast<int>(std::ceil(kResampleZeroCrossings / ratio));
  const int taps = 2 * half;
  const double i0_beta = detail::bessel_i0(kResampleKaiserBeta);

  // Phase ph = (n * down) mod up gives the fractional position ph / up.
  // Tap k of phase ph weights input floor(t) - half + 1 + k.
  auto phase_filter = [&](long long ph) {
    std::vector<double> coeffs(static_cast<std::size_t>(taps));
    const double frac = static_cast<double>(ph) / static_cast<double>(up);
    double sum = 0.0;
    for (int k = 0; k < taps; ++k) {
      const double tau = static_cast<double>(k - half + 1) - frac;
      const double arg = 2.0 * fc * tau;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double r = tau / (half + 1);
      const double window = std::abs(r) < 1.0
                                ? detail::bessel_i0(kResampleKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta
                                : 0.0;
      coeffs[static_cast<std::size_t>(k)] = sinc * window;
      sum += coeffs[static_cast<std::size_t>(k)];
    }
    for (auto& c : coeffs) c /= sum;  // unity DC gain per phase
    return coeffs;
  };

  constexpr long long kMaxTablePhases = 4096;
  std::vector<std::vector<double>> table;
  if (up <= kMaxTablePhases) {
    table.reserve(static_cast<std::size_t>(up));
    for (long long ph = 0; ph < up; ++ph) table.push_back(phase_filter(ph));
  }

  AudioClip out;
  out.sample_rate = target_rate;
  out.id = clip.id;
  out.speaker_id = clip.speaker_id;
  out.samples.resize(static_cast<std::size_t>(out_len));
  std::vector<double> scratch;
  for (long long n = 0; n < out_len; ++n) {
    const long long pos = n * down;
    const long long base = pos / up;
    const long long ph = pos % up;
    const std::vector<double>* coeffs;
    if (!table.empty()) {
      coeffs = &table[static_cast<std::size_t>(ph)];
    } else {
      scratch = phase_filter(ph);
      coeffs = &scratch;
    }
    double acc = 0.0;
    const long long first = base - half + 1;
    for (int k = 0; k < taps; ++k) {
      const long long idx = first + k;
      if (idx < 0 || idx >= in_len) continue;
      acc += (*coeffs)[static_cast<std::size_t>(k)] * clip.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

}  // namespace roomforge
