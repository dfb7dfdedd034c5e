// roomforge/corpus.hpp

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
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "roomforge/audio_io.hpp"
#include "roomforge/errors.hpp"
#include "roomforge/random.hpp"

namespace roomforge {

struct CorpusEntry {
  std::string utterance_id;
  std::string path;
  std::optional<std::string> speaker_id;
  std::optional<std::string> transcript;
  double duration = 0.0;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct CorpusManifest {
  std::string name;
  std::vector<CorpusEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

/// flat: WAVs directly under the root. nested: root/<speaker>/**.wav.
enum class CorpusLayout { kFlat, kNested };

namespace detail {

inline bool is_wav(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

inline std::optional<std::string> read_transcript(const std::filesystem::path& wav) {
  auto txt = wav;
  txt.replace_extension(".txt");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(txt, ec)) return std::nullopt;
  std::ifstream in(txt);
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  return text;
}

}  // namespace detail

/// Picks nested when the root has no WAV files of its own.
inline CorpusLayout detect_layout(const std::string& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(root, ec)) {
    if (e.is_regular_file() && detail::is_wav(e.path())) return CorpusLayout::kFlat;
  }
  return CorpusLayout::kNested;
}

/// Scans `root` for WAV files, in lexicographic order of relative path.
/// Unreadable files are skipped with a warning (also appended to
/// `warnings` when given).
inline CorpusManifest ingest_corpus(const std::string& root, CorpusLayout layout,
                                    std::vector<std::string>* warnings = nullptr) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("corpus root '" + root + "' is not a readable directory");

  struct Found {
    std::string rel;
    fs::path path;
    std::optional<std::string> speaker;
  };
  std::vector<Found> found;
  if (layout == CorpusLayout::kFlat) {
    for (const auto& e : fs::directory_iterator(root, ec)) {
      if (e.is_regular_file() && detail::is_wav(e.path())) {
        found.push_back({e.path().filename().generic_string(), e.path(), std::nullopt});
      }
    }
  } else {
    for (const auto& spk : fs::directory_iterator(root, ec)) {
      if (!spk.is_directory()) continue;
      const auto speaker = spk.path().filename().string();
      for (const auto& e : fs::recursive_directory_iterator(spk.path(), ec)) {
        if (e.is_regular_file() && detail::is_wav(e.path())) {
          found.push_back({fs::relative(e.path(), root).generic_string(), e.path(), speaker});
        }
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) { return a.rel < b.rel; });

  CorpusManifest m;
  m.name = fs::path(root).lexically_normal().filename().string();
  if (m.name.empty()) m.name = fs::path(root).lexically_normal().parent_path().filename().string();
  std::map<std::string, std::string> seen;
  for (const auto& f : found) {
    CorpusEntry e;
    e.utterance_id = f.path.stem().string();
    e.path = f.path.generic_string();
    e.speaker_id = f.speaker;
    try {
      e.duration = read_wav_info(e.path).seconds();
    } catch (const std::exception& ex) {
      spdlog::warn("skipping '{}': {}", e.path, ex.what());
      if (warnings) warnings->push_back(e.path + ": " + ex.what());
      continue;
    }
    e.transcript = detail::read_transcript(f.path);
    auto [it, inserted] = seen.emplace(e.utterance_id, e.path);
    if (!inserted) {
      throw CorpusError("duplicate utterance id '" + e.utterance_id + "' (" + it->second + ", " + e.path + ")");
    }
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw CorpusError("empty corpus: no usable WAV files under '" + root + "'");
  return m;
}

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
};

struct CorpusSplits {
  CorpusManifest train;
  CorpusManifest val;
  CorpusManifest test;
};

inline bool valid_split(const SplitSpec& s) {
  return s.train >= 0 && s.val >= 0 && s.test >= 0 && std::abs(s.train + s.val + s.test - 1.0) <= 1e-9;
}

/// Size of a non-train split: floor(f * n), tolerant of representation
/// error in f (0.29 * 100 must give 29).
inline std::size_t split_size(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

/// Seeded shuffle then cut: val and test get floor(f * N) entries, train
/// takes the remainder. Each output keeps the input's order.
inline CorpusSplits split_corpus(const CorpusManifest& m, const SplitSpec& spec) {
  if (!valid_split(spec)) throw CorpusError("split fractions must be >= 0 and sum to 1");
  const std::size_t n = m.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t n_val = std::min(n, split_size(spec.val, n));
  const std::size_t n_test = std::min(n - n_val, split_size(spec.test, n));

  std::vector<int> bucket(n, 0);  // 0 train, 1 val, 2 test
  for (std::size_t k = 0; k < n_val; ++k) bucket[order[k]] = 1;
  for (std::size_t k = n_val; k < n_val + n_test; ++k) bucket[order[k]] = 2;

  CorpusSplits out;
  out.train.name = m.name + "/train";
  out.val.name = m.name + "/val";
  out.test.name = m.name + "/test";
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = bucket[i] == 0 ? out.train : bucket[i] == 1 ? out.val : out.test;
    dst.entries.push_back(m.entries[i]);
  }
  return out;
}

/// Removes every entry spoken by `speaker_id`. Throws when nothing is left.
inline CorpusManifest exclude_speaker(const CorpusManifest& m, const std::string& speaker_id) {
  CorpusManifest out;
  out.name = m.name;
  for (const auto& e : m.entries) {
    if (e.speaker_id && *e.speaker_id == speaker_id) continue;
    out.entries.push_back(e);
  }
  if (out.entries.empty()) {
    throw CorpusError("excluding speaker '" + speaker_id + "' leaves corpus '" + m.name + "' empty");
  }
  return out;
}

}  // namespace roomforge
