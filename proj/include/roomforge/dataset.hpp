// roomforge/dataset.hpp

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
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "roomforge/audio_io.hpp"
#include "roomforge/corpus.hpp"
#include "roomforge/geometry.hpp"
#include "roomforge/hash.hpp"
#include "roomforge/mixer.hpp"
#include "roomforge/scenario_json.hpp"
#include "roomforge/version.hpp"

namespace roomforge {

/// The scenario failed validation; the report says why.
class InvalidScenario : public Error {
 public:
  explicit InvalidScenario(ValidationReport report)
      : Error(summary(report)), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  static std::string summary(const ValidationReport& r) {
    for (const auto& i : r.issues) {
      if (i.severity == Severity::kError) return "invalid scenario: " + i.path + ": " + i.message;
    }
    return "invalid scenario";
  }
  ValidationReport report_;
};

/// Output directory already holds a dataset.
class OutputExists : public IoError {
 public:
  using IoError::IoError;
};

struct UtteranceRecord {
  std::string utterance_id;
  std::string clean_path;
  std::vector<std::string> output_paths;  // relative to the dataset root, one per mic
  std::optional<std::string> transcript;
  std::optional<std::string> speaker_id;
  std::string room_hash;
  MixRecipe recipe;
  std::string scenario_hash;
  std::string tool_version;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct GenerationFailure {
  std::string utterance_id;
  std::string message;
};

enum class GenerationState { kComplete, kCancelled };

struct DatasetManifest {
  std::string scenario_hash;
  std::uint64_t master_seed = 0;
  std::size_t total = 0;      // utterances in the clean corpus
  std::size_t processed = 0;  // attempted before completion or cancellation
  GenerationState state = GenerationState::kComplete;
  std::string created_utc;
  std::string manifest_hash;  // FNV-1a of manifest.jsonl
  std::vector<UtteranceRecord> records;
  std::vector<GenerationFailure> failures;
};

struct GenerateOptions {
  std::string out_dir;
  std::uint64_t master_seed = 0;
  /// 0 means one worker per hardware thread.
  unsigned workers = 1;
  bool overwrite = false;
  SampleFormat format = SampleFormat::kInt16;
  /// Re-render this many records after generation and compare bytes.
  std::size_t verify_records = 0;
};

struct GenerationControl {
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(std::size_t processed, std::size_t total)> on_progress;
};

inline constexpr const char* kManifestFile = "manifest.jsonl";
inline constexpr const char* kHeaderFile = "header.json";
inline constexpr const char* kWavDir = "wav";

inline Json record_to_json(const UtteranceRecord& r) {
  Json j = Json::object();
  j["utterance_id"] = r.utterance_id;
  j["clean_path"] = r.clean_path;
  j["output_paths"] = r.output_paths;
  j["transcript"] = r.transcript ? Json(*r.transcript) : Json(nullptr);
  j["speaker_id"] = r.speaker_id ? Json(*r.speaker_id) : Json(nullptr);
  j["room_hash"] = r.room_hash;
  j["recipe"] = recipe_to_json(r.recipe);
  j["scenario_hash"] = r.scenario_hash;
  j["tool_version"] = r.tool_version;
  return j;
}

inline UtteranceRecord record_from_json(const Json& j) {
  try {
    UtteranceRecord r;
    r.utterance_id = j.at("utterance_id").get<std::string>();
    r.clean_path = j.at("clean_path").get<std::string>();
    r.output_paths = j.at("output_paths").get<std::vector<std::string>>();
    if (!j.at("transcript").is_null()) r.transcript = j.at("transcript").get<std::string>();
    if (!j.at("speaker_id").is_null()) r.speaker_id = j.at("speaker_id").get<std::string>();
    r.room_hash = j.at("room_hash").get<std::string>();
    r.recipe = recipe_from_json(j.at("recipe"));
    r.scenario_hash = j.at("scenario_hash").get<std::string>();
    r.tool_version = j.at("tool_version").get<std::string>();
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed manifest record: ") + e.what());
  }
}

inline std::string manifest_lines(const std::vector<UtteranceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += canonical_dump(record_to_json(r));
    out.push_back('\n');
  }
  return out;
}

namespace detail {

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline const char* to_string(GenerationState s) { return s == GenerationState::kComplete ? "complete" : "cancelled"; }

inline Json header_json(const DatasetManifest& m, const ScenarioConfig& s, SampleFormat format) {
  Json failures = Json::array();
  for (const auto& f : m.failures) failures.push_back({{"utterance_id", f.utterance_id}, {"error", f.message}});
  return Json{{"scenario_hash", m.scenario_hash},
              {"master_seed", m.master_seed},
              {"tool_version", kToolVersion},
              {"created_utc", m.created_utc},
              {"state", to_string(m.state)},
              {"counts",
               {{"total", m.total},
                {"processed", m.processed},
                {"succeeded", m.records.size()},
                {"failed", m.failures.size()}}},
              {"manifest_hash", m.manifest_hash},
              {"sample_format", format == SampleFormat::kInt16 ? "s16" : "f32"},
              {"failures", failures},
              {"scenario", scenario_to_json(s)}};
}

inline std::string output_name(const std::string& utt, const ScenarioConfig& s, std::size_t mic) {
  std::string name = std::string(kWavDir) + "/" + utt;
  if (s.microphones.size() > 1) name += "__" + s.microphones[mic].id;
  return name + ".wav";
}

inline void prepare_output_dir(const std::string& out_dir, bool overwrite) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path root(out_dir);
  if (fs::exists(root, ec) && !fs::is_empty(root, ec)) {
    if (!overwrite) {
      throw OutputExists("output directory '" + out_dir + "' is not empty (pass overwrite to replace it)");
    }
    fs::remove_all(root / kWavDir, ec);
    fs::remove(root / kManifestFile, ec);
    fs::remove(root / kHeaderFile, ec);
  }
  fs::create_directories(root / kWavDir, ec);
  if (ec) throw IoError("cannot create '" + (root / kWavDir).string() + "': " + ec.message());
}

}  // namespace detail

/// Writes manifest.jsonl and header.json for `m` (records already sorted).
inline void write_manifest(const std::string& out_dir, DatasetManifest& m, const ScenarioConfig& s,
                           SampleFormat format) {
  namespace fs = std::filesystem;
  const std::string lines = manifest_lines(m.records);
  m.manifest_hash = hash_hex(lines);
  write_bytes((fs::path(out_dir) / kManifestFile).string(),
              std::span(reinterpret_cast<const unsigned char*>(lines.data()), lines.size()));
  const std::string header = detail::header_json(m, s, format).dump(2) + "\n";
  write_bytes((fs::path(out_dir) / kHeaderFile).string(),
              std::span(reinterpret_cast<const unsigned char*>(header.data()), header.size()));
}

/// Loads a dataset written by generate_dataset (complete or partial).
inline DatasetManifest read_manifest(const std::string& out_dir) {
  namespace fs = std::filesystem;
  DatasetManifest m;
  const Json header = read_json_file((fs::path(out_dir) / kHeaderFile).string());
  try {
    m.scenario_hash = header.at("scenario_hash").get<std::string>();
    m.master_seed = header.at("master_seed").get<std::uint64_t>();
    m.created_utc = header.at("created_utc").get<std::string>();
    m.state = header.at("state").get<std::string>() == "cancelled" ? GenerationState::kCancelled
                                                                    : GenerationState::kComplete;
    m.total = header.at("counts").at("total").get<std::size_t>();
    m.processed = header.at("counts").at("processed").get<std::size_t>();
    m.manifest_hash = header.at("manifest_hash").get<std::string>();
    for (const auto& f : header.at("failures")) {
      m.failures.push_back({f.at("utterance_id").get<std::string>(), f.at("error").get<std::string>()});
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed dataset header: ") + e.what());
  }
  std::ifstream in(fs::path(out_dir) / kManifestFile);
  if (!in) throw IoError("cannot open manifest in '" + out_dir + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    m.records.push_back(record_from_json(parse_json_text(line, kManifestFile)));
  }
  return m;
}

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Re-renders `record` from its recipe and compares against the files on
/// disk byte for byte.
inline bool verify_record(const ScenarioConfig& s, const UtteranceRecord& record, const std::string& out_dir,
                          const ClipSource& clips, const RirCache& cache, SampleFormat format) {
  namespace fs = std::filesystem;
  CorpusEntry clean{record.utterance_id, record.clean_path, record.speaker_id, std::nullopt, 0.0};
  const AudioClip speech = clips.load(clean);
  const RenderResult r = render_from_recipe(s, speech, record.recipe, clips, cache);
  if (r.recipe.limiter_factor != record.recipe.limiter_factor) return false;
  if (r.outputs.size() != record.output_paths.size()) return false;
  for (std::size_t m = 0; m < r.outputs.size(); ++m) {
    WavSpec spec{s.sample_rate, format, 1};
    const auto expected = encode_wav(r.outputs[m].samples, spec);
    const auto actual = detail::slurp((fs::path(out_dir) / record.output_paths[m]).string());
    if (expected != actual) return false;
  }
  return true;
}

/// Renders one noisy version of every clean utterance into
/// out_dir/{wav/, manifest.jsonl, header.json}. Per-utterance seeds are
/// derived from (master_seed, utterance_id), so the result does not depend
/// on the worker count. Per-utterance failures are recorded and skipped.
inline DatasetManifest generate_dataset(const ScenarioConfig& s, const CorpusManifest& clean,
                                        const NoisePools& pools, const ClipSource& clips,
                                        const GenerateOptions& opts, const GenerationControl& control = {}) {
  const ValidationReport report = validate_scenario(s);
  if (!report.ok) throw InvalidScenario(report);
  for (const auto& src : s.noise_sources) {
    auto it = pools.find(src.pool);
    if (it == pools.end() || it->second.empty()) {
      throw CorpusError("noise pool '" + src.pool + "' (source '" + src.id + "') is missing or empty");
    }
  }
  std::set<std::string> ids;
  for (const auto& e : clean.entries) {
    if (!ids.insert(e.utterance_id).second) throw CorpusError("duplicate utterance id '" + e.utterance_id + "'");
  }

  const unsigned workers = resolve_workers(opts.workers);
  const RirCache cache = RirCache::build(s, workers);
  detail::prepare_output_dir(opts.out_dir, opts.overwrite);
  const std::string shash = scenario_hash(s);

  DatasetManifest manifest;
  manifest.scenario_hash = shash;
  manifest.master_seed = opts.master_seed;
  manifest.total = clean.size();
  manifest.created_utc = detail::utc_now();

  struct Slot {
    bool done = false;
    std::optional<UtteranceRecord> record;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(clean.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> processed{0};
  std::atomic<bool> stopped{false};

  auto work = [&] {
    for (;;) {
      if (control.cancel && control.cancel->load()) {
        stopped = true;
        return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= clean.size()) return;
      const CorpusEntry& entry = clean.entries[i];
      Slot& slot = slots[i];
      try {
        const AudioClip speech = clips.load(entry);
        const std::uint64_t seed = derive_seed(opts.master_seed, entry.utterance_id);
        RenderResult r = render_utterance(s, speech, pools, clips, cache, seed);
        UtteranceRecord rec;
        rec.utterance_id = entry.utterance_id;
        rec.clean_path = entry.path;
        rec.transcript = entry.transcript;
        rec.speaker_id = entry.speaker_id;
        rec.room_hash = r.recipe.room_hash;
        rec.scenario_hash = shash;
        rec.tool_version = kToolVersion;
        for (std::size_t m = 0; m < r.outputs.size(); ++m) {
          const std::string rel = detail::output_name(entry.utterance_id, s, m);
          write_wav((std::filesystem::path(opts.out_dir) / rel).string(), r.outputs[m],
                    WavSpec{s.sample_rate, opts.format, 1});
          rec.output_paths.push_back(rel);
        }
        rec.recipe = std::move(r.recipe);
        slot.record = std::move(rec);
      } catch (const std::exception& e) {
        spdlog::warn("utterance '{}' failed: {}", entry.utterance_id, e.what());
        slot.error = e.what();
      }
      slot.done = true;
      const std::size_t n = processed.fetch_add(1) + 1;
      if (control.on_progress) control.on_progress(n, clean.size());
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].done) continue;
    if (slots[i].record) manifest.records.push_back(std::move(*slots[i].record));
    else manifest.failures.push_back({clean.entries[i].utterance_id, *slots[i].error});
  }
  auto by_id = [](const auto& a, const auto& b) { return a.utterance_id < b.utterance_id; };
  std::sort(manifest.records.begin(), manifest.records.end(), by_id);
  std::sort(manifest.failures.begin(), manifest.failures.end(), by_id);
  manifest.processed = manifest.records.size() + manifest.failures.size();
  manifest.state = stopped && manifest.processed < manifest.total ? GenerationState::kCancelled
                                                                 : GenerationState::kComplete;

  if (manifest.state == GenerationState::kComplete && opts.verify_records > 0 && !manifest.records.empty()) {
    const std::size_t n = std::min(opts.verify_records, manifest.records.size());
    for (std::size_t k = 0; k < n; ++k) {
      const auto& rec = manifest.records[k * manifest.records.size() / n];
      if (!verify_record(s, rec, opts.out_dir, clips, cache, opts.format)) {
        manifest.failures.push_back({rec.utterance_id, "re-render does not reproduce the written audio"});
      }
    }
  }
  write_manifest(opts.out_dir, manifest, s, opts.format);
  return manifest;
}

enum class PoolSplit { kAll, kTrain, kVal, kTest };

inline PoolSplit parse_pool_split(const std::string& name) {
  if (name == "all") return PoolSplit::kAll;
  if (name == "train") return PoolSplit::kTrain;
  if (name == "val") return PoolSplit::kVal;
  if (name == "test") return PoolSplit::kTest;
  throw FormatError("unknown split '" + name + "' (expected all, train, val or test)");
}

/// Ingests noise_root/<pool> for every pool the scenario references and,
/// unless `which` is kAll, keeps only that split of each pool.
inline NoisePools load_noise_pools(const ScenarioConfig& s, const std::string& noise_root, PoolSplit which,
                                   const SplitSpec& split = {}) {
  NoisePools pools;
  for (const auto& src : s.noise_sources) {
    if (pools.count(src.pool)) continue;
    const std::string dir = (std::filesystem::path(noise_root) / src.pool).string();
    CorpusManifest m = ingest_corpus(dir, detect_layout(dir));
    m.name = src.pool;
    if (which != PoolSplit::kAll) {
      CorpusSplits parts = split_corpus(m, split);
      m = which == PoolSplit::kTrain ? parts.train : which == PoolSplit::kVal ? parts.val : parts.test;
      if (m.empty()) throw CorpusError("split of noise pool '" + src.pool + "' is empty");
    }
    pools.emplace(src.pool, std::move(m));
  }
  return pools;
}

/// FNV-1a of every output file, keyed by relative path.
inline std::map<std::string, std::string> output_file_hashes(const std::string& out_dir,
                                                             const DatasetManifest& m) {
  std::map<std::string, std::string> out;
  for (const auto& r : m.records) {
    for (const auto& p : r.output_paths) {
      const auto bytes = detail::slurp((std::filesystem::path(out_dir) / p).string());
      out[p] = to_hex(Fnv1a64().update(bytes).digest());
    }
  }
  return out;
}

}  // namespace roomforge
