// roomforge/mixer.hpp

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

#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "roomforge/audio_io.hpp"
#include "roomforge/corpus.hpp"
#include "roomforge/dsp.hpp"
#include "roomforge/geometry.hpp"
#include "roomforge/random.hpp"
#include "roomforge/rir.hpp"
#include "roomforge/scenario_json.hpp"

namespace roomforge {

/// Outputs whose peak exceeds this are scaled down as a whole.
inline constexpr double kPeakLimit = 0.99;
/// Clip draws per noise source before giving up on a pool.
inline constexpr int kMaxClipAttempts = 5;

using NoisePools = std::map<std::string, CorpusManifest>;

/// Loads corpus audio. Implementations must be safe to call concurrently.
class ClipSource {
 public:
  virtual ~ClipSource() = default;

  /// The clip at its native rate, with id and speaker taken from `entry`.
  virtual AudioClip load(const CorpusEntry& entry) const = 0;

  AudioClip load_at(const CorpusEntry& entry, int sample_rate) const {
    AudioClip clip = load(entry);
    if (clip.sample_rate != sample_rate) clip = resample(clip, sample_rate);
    return clip;
  }
};

/// Reads WAV files from disk.
class WavClipSource final : public ClipSource {
 public:
  AudioClip load(const CorpusEntry& entry) const override {
    AudioClip clip = read_wav(entry.path);
    clip.id = entry.utterance_id;
    clip.speaker_id = entry.speaker_id;
    return clip;
  }
};

/// In-memory clips keyed by path. Unknown paths throw IoError.
class MemoryClipSource final : public ClipSource {
 public:
  void add(const std::string& path, AudioClip clip) { clips_[path] = std::move(clip); }

  AudioClip load(const CorpusEntry& entry) const override {
    auto it = clips_.find(entry.path);
    if (it == clips_.end()) throw IoError("no in-memory clip for '" + entry.path + "'");
    AudioClip clip = it->second;
    clip.id = entry.utterance_id;
    clip.speaker_id = entry.speaker_id;
    return clip;
  }

 private:
  std::map<std::string, AudioClip> clips_;
};

/// Impulse responses for every (room, source, microphone) of a scenario.
/// Built once, then read-only and shared between render threads. Source
/// index 0 is the speaker, i + 1 is noise_sources[i].
class RirCache {
 public:
  RirCache() = default;

  static RirCache build(const ScenarioConfig& s, unsigned workers = 1) {
    RirCache cache;
    if (s.mode == MixMode::kNoRoom) return cache;
    cache.n_rooms_ = s.rooms.size();
    cache.n_sources_ = s.noise_sources.size() + 1;
    cache.n_mics_ = s.microphones.size();
    cache.entries_.resize(cache.n_rooms_ * cache.n_sources_ * cache.n_mics_);

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cache.entries_.size());
    auto work = [&] {
      for (std::size_t k; (k = next.fetch_add(1)) < cache.entries_.size();) {
        const std::size_t mic = k % cache.n_mics_;
        const std::size_t src = (k / cache.n_mics_) % cache.n_sources_;
        const std::size_t room = k / (cache.n_mics_ * cache.n_sources_);
        const SourceSpec& source = src == 0 ? s.speaker : s.noise_sources[src - 1];
        try {
          cache.entries_[k] = compute_for(s, room, source, s.microphones[mic]);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cache.entries_.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    return cache;
  }

  /// RIR length for one room of the scenario, with the max_rir_seconds cap.
  static std::size_t rir_length(const ScenarioConfig& s, const RoomConfig& room, bool* truncated = nullptr) {
    std::size_t len = required_rir_samples(room);
    if (truncated) *truncated = false;
    if (s.max_rir_seconds) {
      const auto cap = static_cast<std::size_t>(
          std::max(1.0, std::ceil(*s.max_rir_seconds * static_cast<double>(room.sample_rate))));
      if (cap < len) {
        len = cap;
        if (truncated) *truncated = true;
      }
    }
    return len;
  }

  static ImpulseResponse compute_for(const ScenarioConfig& s, std::size_t room_index,
                                     const SourceSpec& source, const MicrophoneSpec& mic) {
    const RoomConfig& room = s.rooms.at(room_index);
    bool truncated = false;
    const std::size_t len = rir_length(s, room, &truncated);
    ImpulseResponse h = compute_rir(room, source.position, mic.position, len);
    h.source_id = source.id;
    h.mic_id = mic.id;
    h.truncated = truncated;
    return h;
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  const ImpulseResponse& get(std::size_t room, std::size_t source, std::size_t mic) const {
    if (room >= n_rooms_ || source >= n_sources_ || mic >= n_mics_) {
      throw std::out_of_range("RirCache: index out of range");
    }
    return entries_[(room * n_sources_ + source) * n_mics_ + mic];
  }

 private:
  std::size_t n_rooms_ = 0;
  std::size_t n_sources_ = 0;
  std::size_t n_mics_ = 0;
  std::vector<ImpulseResponse> entries_;
};

/// One included noise source of a mix.
struct NoiseDraw {
  std::string source_id;
  std::string pool;
  std::string clip_id;
  std::string clip_path;
  std::optional<std::string> speaker_id;
  double gain = 0.0;
  std::size_t offset = 0;

  friend bool operator==(const NoiseDraw&, const NoiseDraw&) = default;
};

/// Everything random about one rendered utterance.
struct MixRecipe {
  std::uint64_t seed = 0;
  std::optional<std::size_t> room_index;
  std::string room_hash = "no_room";
  std::vector<NoiseDraw> sources;
  double limiter_factor = 1.0;

  friend bool operator==(const MixRecipe&, const MixRecipe&) = default;
};

struct RenderResult {
  std::vector<AudioClip> outputs;  // one per microphone
  MixRecipe recipe;
};

inline Json recipe_to_json(const MixRecipe& r) {
  Json sources = Json::array();
  for (const auto& d : r.sources) {
    Json j{{"source_id", d.source_id}, {"pool", d.pool},     {"clip_id", d.clip_id},
           {"clip_path", d.clip_path}, {"gain", d.gain},     {"offset", d.offset}};
    j["speaker_id"] = d.speaker_id ? Json(*d.speaker_id) : Json(nullptr);
    sources.push_back(std::move(j));
  }
  Json j{{"seed", r.seed}, {"room_hash", r.room_hash}, {"sources", sources},
         {"limiter_factor", r.limiter_factor}};
  j["room_index"] = r.room_index ? Json(*r.room_index) : Json(nullptr);
  return j;
}

inline MixRecipe recipe_from_json(const Json& j) {
  try {
    MixRecipe r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.room_hash = j.at("room_hash").get<std::string>();
    r.limiter_factor = j.at("limiter_factor").get<double>();
    if (!j.at("room_index").is_null()) r.room_index = j.at("room_index").get<std::size_t>();
    for (const auto& s : j.at("sources")) {
      NoiseDraw d;
      d.source_id = s.at("source_id").get<std::string>();
      d.pool = s.at("pool").get<std::string>();
      d.clip_id = s.at("clip_id").get<std::string>();
      d.clip_path = s.at("clip_path").get<std::string>();
      if (!s.at("speaker_id").is_null()) d.speaker_id = s.at("speaker_id").get<std::string>();
      d.gain = s.at("gain").get<double>();
      d.offset = s.at("offset").get<std::size_t>();
      r.sources.push_back(std::move(d));
    }
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed mix recipe: ") + e.what());
  }
}

namespace detail {

inline const SourceSpec& find_noise_source(const ScenarioConfig& s, const std::string& id, std::size_t* index) {
  for (std::size_t i = 0; i < s.noise_sources.size(); ++i) {
    if (s.noise_sources[i].id == id) {
      *index = i;
      return s.noise_sources[i];
    }
  }
  throw FormatError("recipe names unknown noise source '" + id + "'");
}

// Sums the scene for every microphone and applies the peak limiter.
inline RenderResult mix_scene(const ScenarioConfig& s, const AudioClip& speech, MixRecipe recipe,
                              const std::vector<std::pair<std::size_t, AudioClip>>& scaled_noise,
                              const RirCache& cache) {
  RenderResult result;
  const std::size_t n_mics = s.microphones.size();
  std::vector<std::vector<double>> outs(n_mics);
  if (s.mode == MixMode::kNoRoom) {
    std::vector<double> sum = speech.samples;
    for (const auto& [idx, noise] : scaled_noise) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += noise.samples[i];
    }
    for (auto& o : outs) o = sum;
  } else {
    const std::size_t room = *recipe.room_index;
    for (std::size_t m = 0; m < n_mics; ++m) {
      outs[m] = convolve(speech.samples, cache.get(room, 0, m).samples);
      for (const auto& [idx, noise] : scaled_noise) {
        const auto wet = convolve(noise.samples, cache.get(room, idx + 1, m).samples);
        for (std::size_t i = 0; i < outs[m].size(); ++i) outs[m][i] += wet[i];
      }
    }
  }
  double top = 0.0;
  for (const auto& o : outs) {
    for (double v : o) {
      if (!std::isfinite(v)) throw SignalError("render produced a non-finite sample");
    }
    top = std::max(top, peak(o));
  }
  recipe.limiter_factor = 1.0;
  if (top > kPeakLimit) {
    recipe.limiter_factor = kPeakLimit / top;
    for (auto& o : outs) {
      for (auto& v : o) v *= recipe.limiter_factor;
    }
  }
  for (std::size_t m = 0; m < n_mics; ++m) {
    AudioClip clip;
    clip.sample_rate = s.sample_rate;
    clip.id = n_mics == 1 ? speech.id : speech.id + "__" + s.microphones[m].id;
    clip.speaker_id = speech.speaker_id;
    clip.samples = std::move(outs[m]);
    result.outputs.push_back(std::move(clip));
  }
  result.recipe = std::move(recipe);
  return result;
}

inline void check_render_inputs(const ScenarioConfig& s, const AudioClip& speech, const RirCache& cache) {
  if (speech.samples.empty()) throw SignalError("render: empty speech clip");
  if (speech.sample_rate != s.sample_rate) {
    throw SampleRateMismatch("speech '" + speech.id + "' is " + std::to_string(speech.sample_rate) +
                             " Hz, scenario is " + std::to_string(s.sample_rate) + " Hz");
  }
  if (s.mode == MixMode::kRoom && cache.empty()) throw SignalError("render: RIR cache not built");
}

}  // namespace detail

/// Renders one noisy utterance. Everything random is drawn from `seed`:
/// the room, each source's Bernoulli inclusion, its gain, its clip and the
/// clip's start offset. Noise is scaled against the dry speech RMS before
/// room convolution.
inline RenderResult render_utterance(const ScenarioConfig& s, const AudioClip& speech,
                                     const NoisePools& pools, const ClipSource& clips,
                                     const RirCache& cache, std::uint64_t seed) {
  detail::check_render_inputs(s, speech, cache);
  Rng rng(seed);
  MixRecipe recipe;
  recipe.seed = seed;
  if (s.mode == MixMode::kRoom) {
    recipe.room_index = static_cast<std::size_t>(rng.below(s.rooms.size()));
    recipe.room_hash = cache.get(*recipe.room_index, 0, 0).room_hash;
  }

  std::optional<double> speech_rms;
  std::vector<std::pair<std::size_t, AudioClip>> scaled;
  for (std::size_t i = 0; i < s.noise_sources.size(); ++i) {
    const SourceSpec& src = s.noise_sources[i];
    if (!rng.bernoulli(src.inclusion_prob)) continue;
    const double gain = rng.uniform(src.gain_range.first, src.gain_range.second);

    auto pool_it = pools.find(src.pool);
    if (pool_it == pools.end()) throw UnusableClipError("no noise pool named '" + src.pool + "'");
    std::vector<const CorpusEntry*> eligible;
    for (const auto& e : pool_it->second.entries) {
      if (s.exclude_same_speaker && speech.speaker_id && e.speaker_id && *e.speaker_id == *speech.speaker_id) {
        continue;
      }
      eligible.push_back(&e);
    }
    if (eligible.empty()) throw UnusableClipError("noise pool '" + src.pool + "' has no eligible clip");
    if (!speech_rms) {
      speech_rms = rms(speech.samples);
      if (!(*speech_rms > 0.0)) throw SignalError("speech '" + speech.id + "' is silent");
    }

    bool accepted = false;
    // Rejected clips leave the candidate list.
    for (int attempt = 0; attempt < kMaxClipAttempts && !accepted && !eligible.empty(); ++attempt) {
      const auto pick = static_cast<std::size_t>(rng.below(eligible.size()));
      const CorpusEntry& entry = *eligible[pick];
      eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
      const AudioClip clip = clips.load_at(entry, s.sample_rate);
      if (clip.samples.empty()) continue;
      FittedClip fitted = fit_length(clip, speech.size(), rng);
      if (!(rms(fitted.clip.samples) > kSilentRms)) continue;
      recipe.sources.push_back({src.id, src.pool, entry.utterance_id, entry.path, entry.speaker_id, gain,
                                fitted.offset});
      scaled.emplace_back(i, scale_noise(fitted.clip, *speech_rms, gain));
      accepted = true;
    }
    if (!accepted) {
      throw UnusableClipError("no usable noise clip in pool '" + src.pool + "' after " +
                              std::to_string(kMaxClipAttempts) + " attempts");
    }
  }
  return detail::mix_scene(s, speech, std::move(recipe), scaled, cache);
}

/// Re-renders from a recorded recipe without drawing any randomness.
inline RenderResult render_from_recipe(const ScenarioConfig& s, const AudioClip& speech, const MixRecipe& recipe,
                                       const ClipSource& clips, const RirCache& cache) {
  detail::check_render_inputs(s, speech, cache);
  if (s.mode == MixMode::kRoom && (!recipe.room_index || *recipe.room_index >= s.rooms.size())) {
    throw FormatError("recipe room index does not match the scenario");
  }
  std::vector<std::pair<std::size_t, AudioClip>> scaled;
  const double speech_rms = recipe.sources.empty() ? 0.0 : rms(speech.samples);
  for (const auto& d : recipe.sources) {
    std::size_t index = 0;
    detail::find_noise_source(s, d.source_id, &index);
    CorpusEntry entry{d.clip_id, d.clip_path, d.speaker_id, std::nullopt, 0.0};
    const AudioClip fitted = fit_length_at(clips.load_at(entry, s.sample_rate), speech.size(), d.offset);
    scaled.emplace_back(index, scale_noise(fitted, speech_rms, d.gain));
  }
  return detail::mix_scene(s, speech, recipe, scaled, cache);
}

}  // namespace roomforge
