// roomforge/dsp.hpp

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
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roomforge/errors.hpp"
#include "roomforge/fft.hpp"
#include "roomforge/random.hpp"

namespace roomforge {

/// Mono audio. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;
  std::string id;
  std::optional<std::string> speaker_id;

  std::size_t size() const { return samples.size(); }
  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Linear convolution by FFT overlap-add; result has len(x) + len(h) - 1
/// samples. The FFT size is the next power of two >= 4 * len(h).
inline std::vector<double> convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) throw SignalError("convolve: empty input");
  using Complex = std::complex<double>;
  const std::size_t m = h.size();
  const std::size_t nfft = next_pow2(4 * m);
  const std::size_t block = nfft - m + 1;
  const FftPlan plan(nfft);

  std::vector<Complex> kernel(nfft);
  for (std::size_t i = 0; i < m; ++i) kernel[i] = h[i];
  plan.forward(kernel);

  std::vector<double> out(x.size() + m - 1, 0.0);
  std::vector<Complex> buf(nfft);
  // h is real, so two input blocks ride in one transform: block A in the
  // real part and block B in the imaginary part.
  for (std::size_t start = 0; start < x.size(); start += 2 * block) {
    const std::size_t start_b = start + block;
    std::fill(buf.begin(), buf.end(), Complex{});
    for (std::size_t i = 0; i < block && start + i < x.size(); ++i) buf[i].real(x[start + i]);
    for (std::size_t i = 0; i < block && start_b + i < x.size(); ++i) buf[i].imag(x[start_b + i]);
    plan.forward(buf);
    for (std::size_t k = 0; k < nfft; ++k) {
      const Complex a = buf[k];
      const Complex b = kernel[k];
      buf[k] = {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
    }
    plan.inverse(buf);
    for (std::size_t i = 0; i < nfft && start + i < out.size(); ++i) out[start + i] += buf[i].real();
    if (start_b < x.size()) {
      for (std::size_t i = 0; i < nfft && start_b + i < out.size(); ++i) out[start_b + i] += buf[i].imag();
    }
  }
  return out;
}

inline double rms(std::span<const double> x) {
  if (x.empty()) throw SignalError("rms: empty input");
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double peak(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

/// Clips at or below this RMS count as silent.
inline constexpr double kSilentRms = 1e-6;

/// Gain applied to `noise` so that its RMS equals g * speaker_rms.
inline double noise_scale_factor(std::span<const double> noise, double speaker_rms, double g) {
  if (!(speaker_rms > 0.0)) throw SignalError("scale_noise: speaker RMS must be > 0");
  if (!(g >= 0.0)) throw SignalError("scale_noise: gain must be >= 0");
  if (g == 0.0) return 0.0;
  const double level = rms(noise);
  if (!(level > kSilentRms)) throw UnusableClipError("scale_noise: silent noise clip");
  return g * speaker_rms / level;
}

inline AudioClip scale_noise(const AudioClip& noise, double speaker_rms, double g) {
  const double factor = noise_scale_factor(noise.samples, speaker_rms, g);
  AudioClip out = noise;
  for (auto& v : out.samples) v *= factor;
  return out;
}

/// Crossfade length used when tiling short clips.
inline constexpr double kTileCrossfadeSeconds = 0.010;

struct FittedClip {
  AudioClip clip;
  std::size_t offset = 0;
};

/// Deterministic part of fit_length. Longer clips: the window starting at
/// `offset`. Shorter clips: tiled with linear crossfades, then the window
/// starting at `offset` (< len(x)).
inline AudioClip fit_length_at(const AudioClip& x, std::size_t target, std::size_t offset) {
  if (target == 0) throw SignalError("fit_length: target must be > 0");
  if (x.samples.empty()) throw SignalError("fit_length: empty clip");
  const std::size_t len = x.size();
  AudioClip out;
  out.sample_rate = x.sample_rate;
  out.id = x.id;
  out.speaker_id = x.speaker_id;
  if (len == target) {
    out.samples = x.samples;
    return out;
  }
  if (len > target) {
    if (offset > len - target) throw SignalError("fit_length: offset out of range");
    out.samples.assign(x.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                       x.samples.begin() + static_cast<std::ptrdiff_t>(offset + target));
    return out;
  }
  if (offset >= len) throw SignalError("fit_length: offset out of range");

  const auto fade = std::min<std::size_t>(
      static_cast<std::size_t>(std::lround(kTileCrossfadeSeconds * x.sample_rate)), len / 2);
  std::vector<double> tiled(x.samples);
  tiled.reserve(offset + target + len);
  while (tiled.size() < offset + target) {
    const std::size_t end = tiled.size();
    for (std::size_t j = 0; j < fade; ++j) {
      const double w = static_cast<double>(j + 1) / static_cast<double>(fade + 1);
      double& s = tiled[end - fade + j];
      s = s * (1.0 - w) + x.samples[j] * w;
    }
    tiled.insert(tiled.end(), x.samples.begin() + static_cast<std::ptrdiff_t>(fade), x.samples.end());
  }
  out.samples.assign(tiled.begin() + static_cast<std::ptrdiff_t>(offset),
                     tiled.begin() + static_cast<std::ptrdiff_t>(offset + target));
  return out;
}

/// Fits `x` to exactly `target` samples with a random start. Consumes no
/// randomness when the length already matches.
inline FittedClip fit_length(const AudioClip& x, std::size_t target, Rng& rng) {
  if (target == 0) throw SignalError("fit_length: target must be > 0");
  if (x.samples.empty()) throw SignalError("fit_length: empty clip");
  std::size_t offset = 0;
  if (x.size() > target) offset = static_cast<std::size_t>(rng.below(x.size() - target + 1));
  else if (x.size() < target) offset = static_cast<std::size_t>(rng.below(x.size()));
  return {fit_length_at(x, target, offset), offset};
}

}  // namespace roomforge
