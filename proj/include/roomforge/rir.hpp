// roomforge/rir.hpp

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
#include <array>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "roomforge/errors.hpp"
#include "roomforge/geometry.hpp"
#include "roomforge/scenario_json.hpp"

namespace roomforge {

/// One mirror image of the source as heard at the microphone.
struct ImageArrival {
  double distance = 0.0;
  double amplitude = 0.0;
  double delay_samples = 0.0;
  int order = 0;
  std::array<int, 3> lattice{};  // n, l, m
  std::array<int, 3> parity{};   // p, q, r in {0, 1}

  friend bool operator==(const ImageArrival&, const ImageArrival&) = default;
};

struct ImpulseResponse {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;
  std::string source_id;
  std::string mic_id;
  std::string room_hash;
  /// True when `samples` was cut below required_rir_samples of the room.
  bool truncated = false;
};

/// Fractional delay filter: Hann-windowed sinc, 81 taps.
inline constexpr int kSincHalfWidth = 40;

namespace detail {

inline void check_geometry(const RoomConfig& room, const Vec3& src, const Vec3& mic) {
  ValidationReport report;
  validate_room(room, "room", report);
  if (report.ok) {
    validate_position(src, room, "src", "room", report);
    validate_position(mic, room, "mic", "room", report);
  }
  if (!report.ok) {
    const auto& issue = report.issues.front();
    throw GeometryError(issue.path + ": " + issue.message);
  }
  if (src == mic) throw GeometryError("degenerate geometry: source coincides with microphone");
}

// Visits every image on the mirror lattice with |n_axis| <= radius[axis],
// reflection order <= max_order (if set) and distance <= max_distance (if
// set) whose amplitude is nonzero. Visiting order is fixed.
template <typename Visitor>
void for_each_image(const RoomConfig& room, const Vec3& src, const Vec3& mic,
                    const std::array<int, 3>& radius, std::optional<int> max_order,
                    std::optional<double> max_distance, Visitor&& visit) {
  const double fs_over_c = static_cast<double>(room.sample_rate) / room.speed_of_sound;
  const double max_d2 = max_distance ? (*max_distance) * (*max_distance)
                                     : std::numeric_limits<double>::infinity();
  constexpr double kFourPi = 4.0 * std::numbers::pi;

  struct AxisImage {
    double offset;  // image coordinate minus mic coordinate
    double gain;    // product of wall reflection factors on this axis
    int order;
    int n;
    int p;
  };
  auto axis_images = [&](std::size_t a) {
    std::vector<AxisImage> out;
    const double lo_beta = room.wall_beta[2 * a];
    const double hi_beta = room.wall_beta[2 * a + 1];
    for (int n = -radius[a]; n <= radius[a]; ++n) {
      for (int p = 0; p <= 1; ++p) {
        const int lo_hits = std::abs(n - p);
        const int hi_hits = std::abs(n);
        const int order = lo_hits + hi_hits;
        if (max_order && order > *max_order) continue;
        const double gain = std::pow(lo_beta, lo_hits) * std::pow(hi_beta, hi_hits);
        if (gain == 0.0) continue;
        const double coord = (1 - 2 * p) * src[a] + 2.0 * n * room.dims[a];
        out.push_back({coord - mic[a], gain, order, n, p});
      }
    }
    return out;
  };
  const auto xs = axis_images(0);
  const auto ys = axis_images(1);
  const auto zs = axis_images(2);

  for (const auto& ix : xs) {
    const double dx2 = ix.offset * ix.offset;
    if (dx2 > max_d2) continue;
    for (const auto& iy : ys) {
      const double dxy2 = dx2 + iy.offset * iy.offset;
      if (dxy2 > max_d2) continue;
      if (max_order && ix.order + iy.order > *max_order) continue;
      for (const auto& iz : zs) {
        const int order = ix.order + iy.order + iz.order;
        if (max_order && order > *max_order) continue;
        const double d2 = dxy2 + iz.offset * iz.offset;
        if (d2 > max_d2) continue;
        const double d = std::sqrt(d2);
        ImageArrival arrival;
        arrival.distance = d;
        arrival.amplitude = ix.gain * iy.gain * iz.gain / (kFourPi * d);
        arrival.delay_samples = d * fs_over_c;
        arrival.order = order;
        arrival.lattice = {ix.n, iy.n, iz.n};
        arrival.parity = {ix.p, iy.p, iz.p};
        visit(arrival);
      }
    }
  }
}

}  // namespace detail

/// Every image source of reflection order <= max_order, sorted by delay.
/// Arrivals whose amplitude vanishes (a zero-beta wall) are omitted.
inline std::vector<ImageArrival> enumerate_images(const RoomConfig& room, const Vec3& src,
                                                  const Vec3& mic, int max_order) {
  detail::check_geometry(room, src, mic);
  if (max_order < 0) throw GeometryError("max_order must be >= 0");
  std::vector<ImageArrival> out;
  const std::array<int, 3> radius{max_order, max_order, max_order};
  detail::for_each_image(room, src, mic, radius, max_order, std::nullopt,
                         [&](const ImageArrival& a) { out.push_back(a); });
  std::sort(out.begin(), out.end(), [](const ImageArrival& a, const ImageArrival& b) {
    return std::tie(a.delay_samples, a.order, a.lattice, a.parity) <
           std::tie(b.delay_samples, b.order, b.lattice, b.parity);
  });
  return out;
}

/// Adds amplitude * sinc(t - delay) * hann(t - delay) to `buffer` over 81
/// taps centred on the nearest sample. Taps outside the buffer are dropped.
inline void place_impulse(std::span<double> buffer, double delay_samples, double amplitude) {
  if (!(delay_samples >= 0.0) || !std::isfinite(delay_samples)) {
    throw SignalError("place_impulse: delay must be a finite value >= 0");
  }
  const auto size = static_cast<long long>(buffer.size());
  const double centre = std::floor(delay_samples + 0.5);
  const auto c = static_cast<long long>(centre);
  if (delay_samples == centre) {
    if (c < size) buffer[static_cast<std::size_t>(c)] += amplitude;
    return;
  }
  const long long first = c - kSincHalfWidth;
  const long long last = std::min(c + kSincHalfWidth, size - 1);
  if (last < 0 || first >= size) return;

  constexpr double kPi = std::numbers::pi;
  constexpr double kWindowScale = kPi / (kSincHalfWidth + 1);
  const double cos_step = std::cos(kWindowScale);
  const double sin_step = std::sin(kWindowScale);

  // t = n - delay for n = first; sin(pi (t + j)) = (-1)^j sin(pi t), and the
  // window cosine advances by a fixed rotation.
  const double t0 = static_cast<double>(first) - delay_samples;
  double sin_pi_t = std::sin(kPi * t0);
  double wc = std::cos(kWindowScale * t0);
  double ws = std::sin(kWindowScale * t0);
  for (long long n = first; n <= last; ++n) {
    if (n >= 0) {
      const double t = static_cast<double>(n) - delay_samples;
      const double window = 0.5 * (1.0 + wc);
      buffer[static_cast<std::size_t>(n)] += amplitude * window * sin_pi_t / (kPi * t);
    }
    sin_pi_t = -sin_pi_t;
    const double next_wc = wc * cos_step - ws * sin_step;
    ws = ws * cos_step + wc * sin_step;
    wc = next_wc;
  }
}

/// Lattice radius per axis that covers every image arriving within
/// `length` samples.
inline std::array<int, 3> lattice_radius(const RoomConfig& room, std::size_t length) {
  const double reach = room.speed_of_sound * static_cast<double>(length) / room.sample_rate;
  std::array<int, 3> r{};
  for (std::size_t a = 0; a < 3; ++a) {
    r[a] = static_cast<int>(std::ceil(reach / (2.0 * room.dims[a]))) + 1;
  }
  return r;
}

/// Image-source impulse response from `src` to `mic`. Without `max_order`
/// every image whose taps reach into the buffer is included.
inline ImpulseResponse compute_rir(const RoomConfig& room, const Vec3& src, const Vec3& mic,
                                   std::size_t length, std::optional<int> max_order = std::nullopt) {
  detail::check_geometry(room, src, mic);
  if (length == 0) throw SignalError("compute_rir: length must be > 0");
  if (max_order && *max_order < 0) throw GeometryError("max_order must be >= 0");

  ImpulseResponse h;
  h.sample_rate = room.sample_rate;
  h.room_hash = room_hash(room);
  h.samples.assign(length, 0.0);

  // Images beyond this distance place no tap inside the buffer.
  const double max_distance = (static_cast<double>(length) + kSincHalfWidth + 1.0) *
                              room.speed_of_sound / room.sample_rate;
  std::array<int, 3> radius = lattice_radius(room, length + kSincHalfWidth + 1);
  if (max_order) {
    for (auto& r : radius) r = std::min(r, *max_order);
  }
  std::span<double> buf(h.samples);
  detail::for_each_image(room, src, mic, radius, max_order, max_distance,
                         [&](const ImageArrival& a) { place_impulse(buf, a.delay_samples, a.amplitude); });
  return h;
}

inline constexpr double kEdcFloorDb = -120.0;

/// Schroeder backward integration in dB, clamped at -120 dB.
inline std::vector<double> energy_decay_curve(std::span<const double> h) {
  std::vector<double> tail(h.size());
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    tail[i] = acc;
  }
  if (h.empty() || !(acc > 0.0)) throw SignalError("energy_decay_curve: all-zero impulse response");
  const double total = acc;
  for (auto& v : tail) {
    v = v > 0.0 ? std::max(kEdcFloorDb, 10.0 * std::log10(v / total)) : kEdcFloorDb;
  }
  tail[0] = 0.0;
  return tail;
}

inline std::vector<double> energy_decay_curve(const ImpulseResponse& h) {
  return energy_decay_curve(std::span<const double>(h.samples));
}

/// First index where the curve falls below `level_db`, if any.
inline std::optional<std::size_t> decay_crossing(std::span<const double> edc, double level_db) {
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] < level_db) return i;
  }
  return std::nullopt;
}

}  // namespace roomforge
