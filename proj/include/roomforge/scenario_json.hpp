// roomforge/scenario_json.hpp

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

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "roomforge/errors.hpp"
#include "roomforge/geometry.hpp"
#include "roomforge/hash.hpp"

namespace roomforge {

using Json = nlohmann::json;

/// Canonical text form used for hashing: sorted keys, no insignificant
/// whitespace, floating point numbers printed with 17 significant digits.
inline void canonical_dump(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: already sorted
        if (!first) out.push_back(',');
        first = false;
        out += Json(it.key()).dump();
        out.push_back(':');
        canonical_dump(it.value(), out);
      }
      out.push_back('}');
      break;
    }
    case Json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out.push_back(',');
        canonical_dump(j[i], out);
      }
      out.push_back(']');
      break;
    }
    case Json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
      out += buf;
      break;
    }
    default:
      out += j.dump();
  }
}

inline std::string canonical_dump(const Json& j) {
  std::string out;
  canonical_dump(j, out);
  return out;
}

namespace detail {

inline Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

[[noreturn]] inline void format_error(const std::string& path, const std::string& msg) {
  throw FormatError(path + ": " + msg);
}

inline void reject_unknown(const Json& j, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  if (!j.is_object()) format_error(path, "expected an object");
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!names.count(it.key())) format_error(path + "." + it.key(), "unknown field");
  }
}

inline const Json& require(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) format_error(path + "." + key, "missing required field");
  return *it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) format_error(path, "expected a number");
  return j.get<double>();
}

inline int integer(const Json& j, const std::string& path) {
  if (!j.is_number()) format_error(path, "expected an integer");
  const double d = j.get<double>();
  if (d != static_cast<double>(static_cast<int>(d))) format_error(path, "expected an integer");
  return static_cast<int>(d);
}

inline std::string string(const Json& j, const std::string& path) {
  if (!j.is_string()) format_error(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> numbers(const Json& j, std::size_t n, const std::string& path) {
  if (!j.is_array() || j.size() != n) {
    format_error(path, "expected an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vec3 vec_from(const Json& j, const std::string& path) {
  auto v = numbers(j, 3, path);
  return {v[0], v[1], v[2]};
}

}  // namespace detail

inline Json room_to_json(const RoomConfig& r) {
  Json j = Json::object();
  j["dims"] = detail::vec_json(r.dims);
  j["wall_beta"] = Json::array();
  for (double b : r.wall_beta) j["wall_beta"].push_back(b);
  j["speed_of_sound"] = r.speed_of_sound;
  j["sample_rate"] = r.sample_rate;
  return j;
}

inline RoomConfig room_from_json(const Json& j, const std::string& path = "room") {
  detail::reject_unknown(j, path, {"dims", "wall_beta", "speed_of_sound", "sample_rate"});
  RoomConfig r;
  r.dims = detail::vec_from(detail::require(j, "dims", path), path + ".dims");
  auto beta = detail::numbers(detail::require(j, "wall_beta", path), 6, path + ".wall_beta");
  std::copy(beta.begin(), beta.end(), r.wall_beta.begin());
  if (j.contains("speed_of_sound")) {
    r.speed_of_sound = detail::number(j["speed_of_sound"], path + ".speed_of_sound");
  }
  if (j.contains("sample_rate")) r.sample_rate = detail::integer(j["sample_rate"], path + ".sample_rate");
  return r;
}

inline Json source_to_json(const SourceSpec& s) {
  Json j = Json::object();
  j["id"] = s.id;
  j["role"] = to_string(s.role);
  j["position"] = detail::vec_json(s.position);
  j["inclusion_prob"] = s.inclusion_prob;
  j["gain_range"] = Json::array({s.gain_range.first, s.gain_range.second});
  if (s.role == SourceRole::kNoise) j["pool"] = s.pool;
  return j;
}

inline SourceSpec source_from_json(const Json& j, SourceRole expected, const std::string& path,
                                   bool need_position) {
  detail::reject_unknown(j, path, {"id", "role", "position", "inclusion_prob", "gain_range", "pool"});
  SourceSpec s;
  s.id = detail::string(detail::require(j, "id", path), path + ".id");
  s.role = expected;
  if (j.contains("role")) {
    const auto role = detail::string(j["role"], path + ".role");
    if (role == "speaker") s.role = SourceRole::kSpeaker;
    else if (role == "noise") s.role = SourceRole::kNoise;
    else detail::format_error(path + ".role", "expected \"speaker\" or \"noise\"");
  }
  if (need_position || j.contains("position")) {
    s.position = detail::vec_from(detail::require(j, "position", path), path + ".position");
  }
  if (expected == SourceRole::kNoise) s.gain_range = {0.2, 0.4};
  if (j.contains("inclusion_prob")) {
    s.inclusion_prob = detail::number(j["inclusion_prob"], path + ".inclusion_prob");
  }
  if (j.contains("gain_range")) {
    auto g = detail::numbers(j["gain_range"], 2, path + ".gain_range");
    s.gain_range = {g[0], g[1]};
  }
  if (expected == SourceRole::kNoise) {
    s.pool = detail::string(detail::require(j, "pool", path), path + ".pool");
  } else if (j.contains("pool")) {
    detail::format_error(path + ".pool", "speaker has no noise pool");
  }
  return s;
}

inline Json scenario_to_json(const ScenarioConfig& s) {
  Json j = Json::object();
  j["name"] = s.name;
  j["mode"] = to_string(s.mode);
  j["sample_rate"] = s.sample_rate;
  j["rooms"] = Json::array();
  for (const auto& r : s.rooms) j["rooms"].push_back(room_to_json(r));
  j["speaker"] = source_to_json(s.speaker);
  j["noise_sources"] = Json::array();
  for (const auto& n : s.noise_sources) j["noise_sources"].push_back(source_to_json(n));
  j["microphones"] = Json::array();
  for (const auto& m : s.microphones) {
    j["microphones"].push_back(Json{{"id", m.id}, {"position", detail::vec_json(m.position)}});
  }
  j["max_rir_seconds"] = s.max_rir_seconds ? Json(*s.max_rir_seconds) : Json(nullptr);
  j["exclude_same_speaker"] = s.exclude_same_speaker;
  return j;
}

/// Parses a scenario document. Structural problems (missing fields, wrong
/// types, unknown keys) throw FormatError; value-range problems are left
/// to validate_scenario.
inline ScenarioConfig scenario_from_json(const Json& j) {
  detail::reject_unknown(j, "scenario",
                         {"name", "mode", "sample_rate", "rooms", "speaker", "noise_sources",
                          "microphones", "max_rir_seconds", "exclude_same_speaker"});
  ScenarioConfig s;
  if (j.contains("name")) s.name = detail::string(j["name"], "name");
  if (j.contains("mode")) {
    const auto mode = detail::string(j["mode"], "mode");
    if (mode == "room") s.mode = MixMode::kRoom;
    else if (mode == "no_room") s.mode = MixMode::kNoRoom;
    else detail::format_error("mode", "expected \"room\" or \"no_room\"");
  }
  const bool room_mode = s.mode == MixMode::kRoom;
  if (j.contains("rooms")) {
    const auto& rooms = j["rooms"];
    if (!rooms.is_array()) detail::format_error("rooms", "expected an array");
    for (std::size_t i = 0; i < rooms.size(); ++i) {
      s.rooms.push_back(room_from_json(rooms[i], "rooms[" + std::to_string(i) + "]"));
    }
  } else if (room_mode) {
    detail::format_error("rooms", "missing required field");
  }
  if (j.contains("sample_rate")) {
    s.sample_rate = detail::integer(j["sample_rate"], "sample_rate");
  } else if (!s.rooms.empty()) {
    s.sample_rate = s.rooms.front().sample_rate;
  }
  s.speaker = source_from_json(detail::require(j, "speaker", "scenario"), SourceRole::kSpeaker,
                               "speaker", room_mode);
  if (j.contains("noise_sources")) {
    const auto& ns = j["noise_sources"];
    if (!ns.is_array()) detail::format_error("noise_sources", "expected an array");
    for (std::size_t i = 0; i < ns.size(); ++i) {
      s.noise_sources.push_back(source_from_json(ns[i], SourceRole::kNoise,
                                                 "noise_sources[" + std::to_string(i) + "]",
                                                 room_mode));
    }
  }
  if (j.contains("microphones")) {
    const auto& ms = j["microphones"];
    if (!ms.is_array()) detail::format_error("microphones", "expected an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string path = "microphones[" + std::to_string(i) + "]";
      detail::reject_unknown(ms[i], path, {"id", "position"});
      MicrophoneSpec m;
      m.id = detail::string(detail::require(ms[i], "id", path), path + ".id");
      if (room_mode || ms[i].contains("position")) {
        m.position = detail::vec_from(detail::require(ms[i], "position", path), path + ".position");
      }
      s.microphones.push_back(std::move(m));
    }
  } else {
    // Single microphone at the centre of the smallest common box.
    MicrophoneSpec m{"mic0", {}};
    if (!s.rooms.empty()) {
      Vec3 common = s.rooms.front().dims;
      for (const auto& r : s.rooms) {
        for (std::size_t a = 0; a < 3; ++a) common[a] = std::min(common[a], r.dims[a]);
      }
      m.position = {common.x / 2, common.y / 2, common.z / 2};
    }
    s.microphones.push_back(m);
  }
  if (j.contains("max_rir_seconds") && !j["max_rir_seconds"].is_null()) {
    s.max_rir_seconds = detail::number(j["max_rir_seconds"], "max_rir_seconds");
  }
  if (j.contains("exclude_same_speaker")) {
    if (!j["exclude_same_speaker"].is_boolean()) {
      detail::format_error("exclude_same_speaker", "expected a boolean");
    }
    s.exclude_same_speaker = j["exclude_same_speaker"].get<bool>();
  }
  return s;
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(what + ": invalid JSON: " + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  return scenario_from_json(read_json_file(path));
}

inline std::string scenario_hash(const ScenarioConfig& s) {
  return hash_hex(canonical_dump(scenario_to_json(s)));
}

inline std::string room_hash(const RoomConfig& r) { return hash_hex(canonical_dump(room_to_json(r))); }

inline Json report_to_json(const ValidationReport& r) {
  Json issues = Json::array();
  for (const auto& i : r.issues) {
    issues.push_back({{"severity", to_string(i.severity)}, {"path", i.path}, {"message", i.message}});
  }
  return Json{{"ok", r.ok}, {"issues", issues}};
}

}  // namespace roomforge
