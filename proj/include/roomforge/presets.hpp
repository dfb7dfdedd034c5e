// roomforge/presets.hpp

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

#include <array>
#include <string>
#include <vector>

#include "roomforge/errors.hpp"
#include "roomforge/geometry.hpp"

// Built-in scenarios. Every noise source draws its RMS gain from
// [0.2, 0.4] times the dry speaker RMS and a single microphone records the
// scene. Room geometry, reflection coefficients, positions and inclusion
// probabilities are our own choices.
//
// Noise pools referenced by the presets:
//   household  indoor domestic noise
//   urban      street noise heard through a window
//   speech     competing talkers (a speech corpus, nested by speaker)
//   kitchen    appliances and other kitchen noise
//   generic    mixed environmental noise

namespace roomforge {

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"home", "cocktail", "kitchen", "room", "no_room"};
  return names;
}

namespace detail {

inline RoomConfig make_room(Vec3 dims, double walls, double floor, double ceiling) {
  RoomConfig r;
  r.dims = dims;
  r.wall_beta = {walls, walls, walls, walls, floor, ceiling};
  return r;
}

inline SourceSpec noise(std::string id, std::string pool, Vec3 pos, double p) {
  return {std::move(id), SourceRole::kNoise, pos, p, {0.2, 0.4}, std::move(pool)};
}

inline SourceSpec talker(Vec3 pos) { return {"speaker", SourceRole::kSpeaker, pos, 1.0, {1.0, 1.0}, {}}; }

}  // namespace detail

inline ScenarioConfig load_preset(const std::string& name) {
  using detail::make_room;
  using detail::noise;
  ScenarioConfig s;
  s.name = name;
  if (name == "home") {
    // Living room, carpeted floor, street-side window on the x1 wall.
    s.rooms = {make_room({5.0, 4.0, 2.7}, 0.85, 0.6, 0.8)};
    s.speaker = detail::talker({1.5, 2.0, 1.6});
    s.noise_sources = {noise("household", "household", {4.2, 1.0, 0.8}, 0.8),
                       noise("urban_window", "urban", {4.8, 3.0, 1.5}, 0.5)};
    s.microphones = {{"mic0", {3.0, 2.2, 1.2}}};
  } else if (name == "cocktail") {
    s.rooms = {make_room({8.0, 6.0, 3.0}, 0.8, 0.7, 0.75)};
    s.speaker = detail::talker({3.0, 3.0, 1.6});
    s.noise_sources = {noise("talker1", "speech", {5.5, 4.5, 1.6}, 0.9),
                       noise("talker2", "speech", {1.2, 5.0, 1.7}, 0.7),
                       noise("talker3", "speech", {6.8, 1.0, 1.5}, 0.5)};
    s.microphones = {{"mic0", {4.0, 3.0, 1.5}}};
    s.exclude_same_speaker = true;
  } else if (name == "kitchen") {
    // Tiled surfaces: strongly reflective.
    s.rooms = {make_room({4.0, 3.5, 2.6}, 0.9, 0.85, 0.85)};
    s.speaker = detail::talker({2.0, 2.5, 1.6});
    s.noise_sources = {noise("appliance", "kitchen", {0.5, 1.0, 0.9}, 0.8),
                       noise("kitchen_misc", "kitchen", {3.0, 0.4, 1.0}, 0.6)};
    s.microphones = {{"mic0", {2.5, 1.5, 1.1}}};
  } else if (name == "room") {
    // Five rooms of different size and absorption. Positions fit the
    // smallest room.
    s.rooms = {make_room({3.5, 3.0, 2.5}, 0.8, 0.7, 0.8),
               make_room({5.0, 4.0, 2.8}, 0.7, 0.6, 0.7),
               make_room({7.0, 5.0, 3.0}, 0.85, 0.75, 0.8),
               make_room({4.5, 6.0, 3.2}, 0.75, 0.5, 0.9),
               make_room({10.0, 8.0, 4.0}, 0.6, 0.6, 0.6)};
    s.speaker = detail::talker({1.2, 1.0, 1.5});
    s.noise_sources = {noise("ambient", "generic", {3.0, 2.5, 1.0}, 0.8),
                       noise("background", "generic", {0.6, 2.4, 2.0}, 0.6)};
    s.microphones = {{"mic0", {2.2, 1.8, 1.3}}};
  } else if (name == "no_room") {
    // Additive noise only; positions are ignored.
    s.mode = MixMode::kNoRoom;
    s.noise_sources = {noise("background", "generic", {}, 1.0)};
    s.microphones = {{"mic0", {}}};
  } else {
    throw FormatError("unknown preset '" + name + "'");
  }
  return s;
}

}  // namespace roomforge
