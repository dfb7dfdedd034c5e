// roomforge/geometry.hpp

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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roomforge/errors.hpp"

namespace roomforge {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](std::size_t axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  double& operator[](std::size_t axis) { return axis == 0 ? x : axis == 1 ? y : z; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

inline constexpr double kDefaultSpeedOfSound = 343.0;
inline constexpr int kDefaultSampleRate = 16000;
/// Minimum distance between any source/microphone and any wall, in meters.
inline constexpr double kWallMargin = 0.1;
/// Reflection coefficients at or above this value draw a warning.
inline constexpr double kHighBetaWarning = 0.98;

/// Wall order used by `RoomConfig::wall_beta`.
enum Wall : std::size_t { kX0 = 0, kX1, kY0, kY1, kZ0, kZ1 };

/// Shoebox room. Reflection coefficients are pressure (amplitude)
/// coefficients; energy absorption is 1 - beta^2.
struct RoomConfig {
  Vec3 dims{};
  std::array<double, 6> wall_beta{};
  double speed_of_sound = kDefaultSpeedOfSound;
  int sample_rate = kDefaultSampleRate;

  friend bool operator==(const RoomConfig&, const RoomConfig&) = default;
};

enum class SourceRole { kSpeaker, kNoise };

struct SourceSpec {
  std::string id;
  SourceRole role = SourceRole::kNoise;
  Vec3 position{};
  double inclusion_prob = 1.0;
  /// Noise RMS as a multiple of the dry speaker RMS, drawn uniformly.
  std::pair<double, double> gain_range{1.0, 1.0};
  /// Name of the noise-corpus pool clips are drawn from (noise only).
  std::string pool;

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct MicrophoneSpec {
  std::string id;
  Vec3 position{};

  friend bool operator==(const MicrophoneSpec&, const MicrophoneSpec&) = default;
};

enum class MixMode { kRoom, kNoRoom };

struct ScenarioConfig {
  std::string name;
  MixMode mode = MixMode::kRoom;
  int sample_rate = kDefaultSampleRate;
  /// One room is sampled uniformly per utterance. Ignored in no-room mode.
  std::vector<RoomConfig> rooms;
  SourceSpec speaker{"speaker", SourceRole::kSpeaker, {}, 1.0, {1.0, 1.0}, {}};
  std::vector<SourceSpec> noise_sources;
  std::vector<MicrophoneSpec> microphones;
  /// Truncates room impulse responses to this many seconds.
  std::optional<double> max_rir_seconds;
  /// Never draw a noise clip whose speaker_id equals the clean utterance's.
  bool exclude_same_speaker = false;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

enum class Severity { kWarning, kError };

struct ValidationIssue {
  Severity severity = Severity::kError;
  std::string path;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  void error(std::string path, std::string message) {
    issues.push_back({Severity::kError, std::move(path), std::move(message)});
    ok = false;
  }
  void warning(std::string path, std::string message) {
    issues.push_back({Severity::kWarning, std::move(path), std::move(message)});
  }
  std::size_t error_count() const {
    return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](const auto& i) {
      return i.severity == Severity::kError;
    }));
  }
};

inline double room_volume(const RoomConfig& r) { return r.dims.x * r.dims.y * r.dims.z; }

/// Sabine reverberation time in seconds. Throws GeometryError when the room
/// has no absorbing surface.
inline double estimate_t60(const RoomConfig& r) {
  const double ayz = r.dims.y * r.dims.z;
  const double axz = r.dims.x * r.dims.z;
  const double axy = r.dims.x * r.dims.y;
  const std::array<double, 6> area{ayz, ayz, axz, axz, axy, axy};
  double absorption = 0.0;
  for (std::size_t w = 0; w < 6; ++w) {
    const double beta = r.wall_beta[w];
    absorption += (1.0 - beta * beta) * area[w];
  }
  if (!(absorption > 0.0) || !std::isfinite(absorption)) {
    throw GeometryError("non-absorbing room: unbounded reverberation");
  }
  return 0.161 * room_volume(r) / absorption;
}

inline constexpr double kMinRirSeconds = 0.05;
inline constexpr double kT60Headroom = 1.25;

/// Impulse response length in samples:
/// ceil(fs * max(override, 1.25 * T60, 0.05 s)).
inline std::size_t required_rir_samples(const RoomConfig& r,
                                        std::optional<double> override_seconds = std::nullopt) {
  double seconds = std::max(kMinRirSeconds, kT60Headroom * estimate_t60(r));
  if (override_seconds) seconds = std::max(seconds, *override_seconds);
  const double n = std::ceil(static_cast<double>(r.sample_rate) * seconds);
  return static_cast<std::size_t>(std::max(1.0, n));
}

namespace detail {

inline std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

inline bool finite3(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

}  // namespace detail

inline void validate_room(const RoomConfig& r, const std::string& path, ValidationReport& report) {
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(r.dims[a] > 0.0) || !std::isfinite(r.dims[a])) {
      report.error(path + ".dims." + kAxis[a], "room dimension must be > 0");
    }
  }
  for (std::size_t w = 0; w < 6; ++w) {
    const double b = r.wall_beta[w];
    const std::string p = detail::index_path(path + ".wall_beta", w);
    if (!std::isfinite(b) || b < 0.0) {
      report.error(p, "reflection coefficient must be >= 0");
    } else if (b >= 1.0) {
      report.error(p, "reflection coefficient must be < 1");
    } else if (b >= kHighBetaWarning) {
      report.warning(p, "reflection coefficient close to 1: very long reverberation");
    }
  }
  if (!(r.speed_of_sound > 0.0) || !std::isfinite(r.speed_of_sound)) {
    report.error(path + ".speed_of_sound", "speed of sound must be > 0");
  }
  if (r.sample_rate <= 0) {
    report.error(path + ".sample_rate", "sample rate must be > 0");
  }
}

/// Checks that `pos` lies inside the room with the wall margin.
inline void validate_position(const Vec3& pos, const RoomConfig& r, const std::string& path,
                              const std::string& room_path, ValidationReport& report) {
  if (!detail::finite3(pos)) {
    report.error(path, "position must be finite");
    return;
  }
  bool outside = false;
  bool near_wall = false;
  for (std::size_t a = 0; a < 3; ++a) {
    if (pos[a] < 0.0 || pos[a] > r.dims[a]) outside = true;
    else if (pos[a] < kWallMargin || pos[a] > r.dims[a] - kWallMargin) near_wall = true;
  }
  if (outside) {
    report.error(path, "position outside room " + room_path);
  } else if (near_wall) {
    report.error(path, "position closer than 0.1 m to a wall of " + room_path);
  }
}

namespace detail {

inline void validate_source(const SourceSpec& s, const std::string& path, ValidationReport& report) {
  if (s.id.empty()) report.error(path + ".id", "id must be non-empty");
  if (!(s.inclusion_prob >= 0.0 && s.inclusion_prob <= 1.0)) {
    report.error(path + ".inclusion_prob", "inclusion probability must be in [0, 1]");
  }
  const auto [lo, hi] = s.gain_range;
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0 || lo > hi) {
    report.error(path + ".gain_range", "gain range must satisfy 0 <= lo <= hi");
  }
  if (s.role == SourceRole::kSpeaker) {
    if (s.inclusion_prob != 1.0) {
      report.error(path + ".inclusion_prob", "speaker inclusion probability must be 1");
    }
    if (lo != 1.0 || hi != 1.0) report.error(path + ".gain_range", "speaker gain range must be (1, 1)");
  } else {
    if (s.pool.empty()) report.error(path + ".pool", "noise source must name a corpus pool");
    if (hi > 1.0) report.warning(path + ".gain_range", "noise louder than the speaker");
  }
}

}  // namespace detail

/// Checks every invariant of the scenario. Never throws; the report
/// carries one error issue per violation.
inline ValidationReport validate_scenario(const ScenarioConfig& s) {
  ValidationReport report;
  if (s.sample_rate <= 0) report.error("sample_rate", "sample rate must be > 0");

  if (s.speaker.role != SourceRole::kSpeaker) report.error("speaker.role", "speaker role must be speaker");
  detail::validate_source(s.speaker, "speaker", report);

  std::vector<std::string> ids{s.speaker.id};
  for (std::size_t i = 0; i < s.noise_sources.size(); ++i) {
    const auto& n = s.noise_sources[i];
    const std::string path = detail::index_path("noise_sources", i);
    if (n.role != SourceRole::kNoise) report.error(path + ".role", "noise source role must be noise");
    detail::validate_source(n, path, report);
    if (std::find(ids.begin(), ids.end(), n.id) != ids.end()) {
      report.error(path + ".id", "duplicate source id '" + n.id + "'");
    }
    ids.push_back(n.id);
  }

  if (s.microphones.empty()) report.error("microphones", "at least one microphone is required");
  std::vector<std::string> mic_ids;
  for (std::size_t i = 0; i < s.microphones.size(); ++i) {
    const auto& m = s.microphones[i];
    const std::string path = detail::index_path("microphones", i);
    if (m.id.empty()) report.error(path + ".id", "id must be non-empty");
    if (std::find(mic_ids.begin(), mic_ids.end(), m.id) != mic_ids.end()) {
      report.error(path + ".id", "duplicate microphone id '" + m.id + "'");
    }
    mic_ids.push_back(m.id);
  }

  if (s.max_rir_seconds && !(*s.max_rir_seconds > 0.0)) {
    report.error("max_rir_seconds", "maximum impulse response length must be > 0");
  }

  if (s.mode == MixMode::kNoRoom) return report;

  if (s.rooms.empty()) report.error("rooms", "room mode requires at least one room");
  for (std::size_t r = 0; r < s.rooms.size(); ++r) {
    const auto& room = s.rooms[r];
    const std::string room_path = detail::index_path("rooms", r);
    const std::size_t before = report.error_count();
    validate_room(room, room_path, report);
    if (room.sample_rate != s.sample_rate) {
      report.error(room_path + ".sample_rate", "room sample rate differs from scenario sample rate");
    }
    if (report.error_count() != before) continue;

    validate_position(s.speaker.position, room, "speaker.position", room_path, report);
    for (std::size_t i = 0; i < s.noise_sources.size(); ++i) {
      validate_position(s.noise_sources[i].position, room,
                        detail::index_path("noise_sources", i) + ".position", room_path, report);
    }
    for (std::size_t i = 0; i < s.microphones.size(); ++i) {
      validate_position(s.microphones[i].position, room,
                        detail::index_path("microphones", i) + ".position", room_path, report);
    }
    try {
      if (estimate_t60(room) > 3.0) {
        report.warning(room_path, "estimated T60 above 3 s: very long impulse responses");
      }
    } catch (const GeometryError&) {
    }
  }

  for (std::size_t i = 0; i < s.microphones.size(); ++i) {
    const auto& mic = s.microphones[i].position;
    auto check = [&](const SourceSpec& src, const std::string& path) {
      if (src.position == mic) {
        report.error(path + ".position",
                     "source coincides with microphone '" + s.microphones[i].id + "'");
      }
    };
    check(s.speaker, "speaker");
    for (std::size_t j = 0; j < s.noise_sources.size(); ++j) {
      check(s.noise_sources[j], detail::index_path("noise_sources", j));
    }
  }
  return report;
}

inline const char* to_string(Severity s) { return s == Severity::kError ? "error" : "warning"; }
inline const char* to_string(MixMode m) { return m == MixMode::kRoom ? "room" : "no_room"; }
inline const char* to_string(SourceRole r) { return r == SourceRole::kSpeaker ? "speaker" : "noise"; }

}  // namespace roomforge
