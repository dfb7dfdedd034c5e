// roomforge/service.hpp

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
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "roomforge/audio_io.hpp"
#include "roomforge/dataset.hpp"
#include "roomforge/mixer.hpp"
#include "roomforge/pipeline.hpp"
#include "roomforge/presets.hpp"
#include "roomforge/rir.hpp"
#include "roomforge/scenario_json.hpp"
#include "roomforge/version.hpp"

namespace roomforge {

inline std::string base64_encode(std::span<const unsigned char> in) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < in.size()) {
    std::uint32_t v = in[i] << 16;
    if (i + 1 < in.size()) v |= in[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < in.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

/// Little-endian float32 samples, base64 encoded.
inline std::string encode_f32_base64(std::span<const double> samples) {
  std::vector<unsigned char> bytes;
  bytes.reserve(samples.size() * 4);
  for (double v : samples) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<unsigned char>(bits >> (8 * k)));
  }
  return base64_encode(bytes);
}

enum class JobState { kQueued, kRunning, kDone, kFailed, kCancelled };

inline const char* to_string(JobState s) {
  switch (s) {
    case JobState::kQueued: return "queued";
    case JobState::kRunning: return "running";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
    case JobState::kCancelled: return "cancelled";
  }
  return "unknown";
}

struct JobSnapshot {
  std::string id;
  JobState state = JobState::kQueued;
  std::size_t processed = 0;
  std::size_t total = 0;
  std::string submitted_utc;
  std::string started_utc;
  std::string finished_utc;
  std::string out_dir;
  std::string manifest_hash;
  std::vector<std::string> errors;
};

inline Json job_to_json(const JobSnapshot& j) {
  return Json{{"id", j.id},
              {"state", to_string(j.state)},
              {"progress", {{"processed", j.processed}, {"total", j.total}}},
              {"submitted_utc", j.submitted_utc},
              {"started_utc", j.started_utc.empty() ? Json(nullptr) : Json(j.started_utc)},
              {"finished_utc", j.finished_utc.empty() ? Json(nullptr) : Json(j.finished_utc)},
              {"out_dir", j.out_dir},
              {"manifest_hash", j.manifest_hash.empty() ? Json(nullptr) : Json(j.manifest_hash)},
              {"errors", j.errors}};
}

class QueueFull : public Error {
 public:
  using Error::Error;
};

/// FIFO of generation jobs with a single runner thread: at most one job is
/// running at any time.
class JobQueue {
 public:
  using Runner = std::function<DatasetManifest(const GenerationRequest&, const GenerationControl&)>;

  explicit JobQueue(std::size_t limit = 16, Runner runner = run_generation)
      : limit_(limit), runner_(std::move(runner)), thread_([this] { loop(); }) {}

  ~JobQueue() {
    {
      std::lock_guard lock(mu_);
      shutdown_ = true;
      for (auto& [id, job] : jobs_) job->cancel = true;
    }
    cv_.notify_all();
    thread_.join();
  }

  JobQueue(const JobQueue&) = delete;
  JobQueue& operator=(const JobQueue&) = delete;

  std::string submit(GenerationRequest req) {
    std::lock_guard lock(mu_);
    if (pending_.size() >= limit_) throw QueueFull("job queue full (" + std::to_string(limit_) + " queued)");
    auto job = std::make_shared<Job>();
    job->id = "job-" + to_hex(derive_seed(++counter_, detail::utc_now())).substr(0, 12);
    job->request = std::move(req);
    job->snap.id = job->id;
    job->snap.out_dir = job->request.options.out_dir;
    job->snap.submitted_utc = detail::utc_now();
    jobs_[job->id] = job;
    pending_.push_back(job);
    cv_.notify_all();
    return job->id;
  }

  std::optional<JobSnapshot> status(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return snapshot(*it->second);
  }

  std::vector<JobSnapshot> list() const {
    std::lock_guard lock(mu_);
    std::vector<JobSnapshot> out;
    for (const auto& [id, job] : jobs_) out.push_back(snapshot(*job));
    return out;
  }

  /// Requests cancellation. Queued jobs are cancelled at once; a running
  /// job stops after the utterances in flight and flushes a partial
  /// manifest.
  std::optional<JobSnapshot> cancel(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    Job& job = *it->second;
    job.cancel = true;
    if (job.snap.state == JobState::kQueued) {
      pending_.erase(std::remove(pending_.begin(), pending_.end(), it->second), pending_.end());
      job.snap.state = JobState::kCancelled;
      job.snap.finished_utc = detail::utc_now();
    }
    return snapshot(job);
  }

 private:
  struct Job {
    std::string id;
    GenerationRequest request;
    JobSnapshot snap;  // guarded by JobQueue::mu_
    std::atomic<bool> cancel{false};
    std::atomic<std::size_t> processed{0};
    std::atomic<std::size_t> total{0};
  };

  static JobSnapshot snapshot(const Job& job) {
    JobSnapshot s = job.snap;
    if (s.state == JobState::kRunning) {
      s.processed = job.processed.load();
      s.total = job.total.load();
    }
    return s;
  }

  void loop() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return shutdown_ || !pending_.empty(); });
        if (shutdown_) return;
        job = pending_.front();
        pending_.pop_front();
        job->snap.state = JobState::kRunning;
        job->snap.started_utc = detail::utc_now();
      }
      run(*job);
    }
  }

  void run(Job& job) {
    GenerationControl control;
    control.cancel = &job.cancel;
    control.on_progress = [&job](std::size_t done, std::size_t total) {
      job.total = total;
      std::size_t cur = job.processed.load();
      while (cur < done && !job.processed.compare_exchange_weak(cur, done)) {
      }
    };
    JobState final_state = JobState::kDone;
    std::vector<std::string> errors;
    DatasetManifest manifest;
    try {
      manifest = runner_(job.request, control);
      if (manifest.state == GenerationState::kCancelled) final_state = JobState::kCancelled;
      for (const auto& f : manifest.failures) errors.push_back(f.utterance_id + ": " + f.message);
    } catch (const std::exception& e) {
      spdlog::error("job {} failed: {}", job.id, e.what());
      final_state = JobState::kFailed;
      errors.push_back(e.what());
    }
    std::lock_guard lock(mu_);
    job.snap.state = final_state;
    job.snap.processed = final_state == JobState::kFailed ? job.processed.load() : manifest.processed;
    job.snap.total = final_state == JobState::kFailed ? job.total.load() : manifest.total;
    job.snap.manifest_hash = manifest.manifest_hash;
    job.snap.errors = std::move(errors);
    job.snap.finished_utc = detail::utc_now();
  }

  std::size_t limit_;
  Runner runner_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> pending_;
  std::uint64_t counter_ = 0;
  bool shutdown_ = false;
  std::thread thread_;  // last: starts after the members above exist
};

struct ServiceOptions {
  std::string static_dir;  // UI bundle; not served when empty
  std::string noise_root;  // pools for /api/preview/mix
  std::size_t queue_limit = 16;
  double preview_max_seconds = 1.0;
  int preview_max_sample_rate = 192000;
  std::size_t preview_max_edc_points = 16384;
};

/// HTTP API behind the room configurator UI. JSON bodies throughout.
class Service {
 public:
  explicit Service(ServiceOptions opts = {})
      : opts_(std::move(opts)), jobs_(opts_.queue_limit), scenario_(load_preset("home")) {
    routes();
  }

  ~Service() { stop(); }

  httplib::Server& server() { return server_; }
  JobQueue& jobs() { return jobs_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() {
    if (server_.is_running()) server_.stop();
  }

  /// Preview payload for one source/mic pair; throws InvalidScenario on
  /// bad geometry.
  Json preview_rir(const Json& body) const {
    if (!body.is_object()) throw FormatError("request: expected an object");
    const RoomConfig room = room_from_json(detail::require(body, "room", "request"), "room");
    const Vec3 src = detail::vec_from(detail::require(body, "src", "request"), "src");
    const Vec3 mic = detail::vec_from(detail::require(body, "mic", "request"), "mic");
    std::optional<int> max_order;
    if (body.contains("max_order") && !body["max_order"].is_null()) {
      max_order = detail::integer(body["max_order"], "max_order");
    }
    ValidationReport report;
    validate_room(room, "room", report);
    if (report.ok) {
      validate_position(src, room, "src", "room", report);
      validate_position(mic, room, "mic", "room", report);
      if (src == mic) report.error("src", "source coincides with microphone");
      if (room.sample_rate > opts_.preview_max_sample_rate) {
        report.error("room.sample_rate", "preview supports sample rates up to " +
                                             std::to_string(opts_.preview_max_sample_rate) + " Hz");
      }
    }
    if (max_order && *max_order < 0) report.error("max_order", "max_order must be >= 0");
    if (!report.ok) throw InvalidScenario(report);

    const double t60 = estimate_t60(room);
    const std::size_t needed = required_rir_samples(room);
    const auto cap = static_cast<std::size_t>(std::ceil(opts_.preview_max_seconds * room.sample_rate));
    const std::size_t length = std::min(needed, cap);
    const ImpulseResponse h = compute_rir(room, src, mic, length, max_order);
    const auto edc = energy_decay_curve(h);
    const std::size_t step = (edc.size() + opts_.preview_max_edc_points - 1) / opts_.preview_max_edc_points;
    Json points = Json::array();
    for (std::size_t i = 0; i < edc.size(); i += step) points.push_back(edc[i]);
    return Json{{"t60_estimate", t60},
                {"sample_rate", room.sample_rate},
                {"length", length},
                {"truncated", length < needed},
                {"room_hash", h.room_hash},
                {"direct_path_samples", distance(src, mic) * room.sample_rate / room.speed_of_sound},
                {"rir", encode_f32_base64(h.samples)},
                {"edc", points},
                {"edc_step", step}};
  }

 private:
  static void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }
  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, Json{{"error", message}});
  }

  // Maps library exceptions to status codes.
  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const InvalidScenario& e) {
      send_json(res, 422, report_to_json(e.report()));
    } catch (const FormatError& e) {
      send_error(res, 400, e.what());
    } catch (const QueueFull& e) {
      send_error(res, 409, e.what());
    } catch (const GeometryError& e) {
      ValidationReport r;
      r.error("", e.what());
      send_json(res, 422, report_to_json(r));
    } catch (const UnusableClipError& e) {
      send_error(res, 422, e.what());
    } catch (const WavError& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  static ScenarioConfig validated(const Json& j) {
    ScenarioConfig s = scenario_from_json(j);
    ValidationReport report = validate_scenario(s);
    if (!report.ok) throw InvalidScenario(std::move(report));
    return s;
  }

  ScenarioConfig current_scenario() const {
    std::lock_guard lock(mu_);
    return scenario_;
  }

  const CorpusManifest& server_pool(const std::string& name) {
    std::lock_guard lock(pool_mu_);
    auto it = pool_cache_.find(name);
    if (it != pool_cache_.end()) return it->second;
    if (opts_.noise_root.empty()) throw UnusableClipError("no clips uploaded for noise pool '" + name + "'");
    const std::string dir = (std::filesystem::path(opts_.noise_root) / name).string();
    CorpusManifest m = ingest_corpus(dir, detect_layout(dir));
    m.name = name;
    return pool_cache_.emplace(name, std::move(m)).first->second;
  }

  void preview_mix(const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("speech")) throw FormatError("multipart field 'speech' (WAV) is required");
    ScenarioConfig s = req.has_file("scenario")
                           ? validated(parse_json_text(req.get_file_value("scenario").content, "scenario"))
                           : current_scenario();
    std::uint64_t seed = 0;
    if (req.has_file("seed")) {
      try {
        seed = std::stoull(req.get_file_value("seed").content);
      } catch (const std::exception&) {
        throw FormatError("seed: expected an unsigned integer");
      }
    }
    const std::string speech_bytes = req.get_file_value("speech").content;
    MemoryClipSource clips;
    const auto decode = [](const std::string& bytes, const std::string& name) {
      return decode_wav(std::span(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()), name);
    };
    AudioClip speech = decode(speech_bytes, "speech");
    if (speech.sample_rate != s.sample_rate) speech = resample(speech, s.sample_rate);

    NoisePools pools;
    for (const auto& src : s.noise_sources) {
      if (pools.count(src.pool)) continue;
      const std::string field = "noise." + src.pool;
      if (req.has_file(field)) {
        CorpusManifest m;
        m.name = src.pool;
        std::size_t k = 0;
        for (const auto& part : req.get_file_values(field)) {
          const std::string key = "upload:" + field + "/" + std::to_string(k++);
          clips.add(key, decode(part.content, key));
          m.entries.push_back({key, key, std::nullopt, std::nullopt, 0.0});
        }
        pools.emplace(src.pool, std::move(m));
      } else {
        const CorpusManifest& m = server_pool(src.pool);
        for (const auto& e : m.entries) clips.add(e.path, read_wav(e.path));
        pools.emplace(src.pool, m);
      }
    }
    if (s.mode == MixMode::kRoom) {
      s.max_rir_seconds = std::min(s.max_rir_seconds.value_or(opts_.preview_max_seconds), opts_.preview_max_seconds);
    }
    const RirCache cache = RirCache::build(s);
    const RenderResult r = render_utterance(s, speech, pools, clips, cache, seed);
    const auto wav = encode_wav(r.outputs.front().samples, WavSpec{s.sample_rate, SampleFormat::kFloat32, 1});
    res.status = 200;
    res.set_header("X-Mix-Recipe", canonical_dump(recipe_to_json(r.recipe)));
    res.set_content(std::string(wav.begin(), wav.end()), "audio/wav");
  }

  GenerationRequest job_request(const Json& body) const {
    if (!body.is_object()) throw FormatError("request: expected an object");
    GenerationRequest req;
    req.scenario = body.contains("scenario") ? validated(body["scenario"]) : current_scenario();
    req.clean_dir = detail::string(detail::require(body, "clean", "request"), "clean");
    req.options.out_dir = detail::string(detail::require(body, "out", "request"), "out");
    if (body.contains("noise_root")) req.noise_root = detail::string(body["noise_root"], "noise_root");
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned() && !body["seed"].is_number_integer()) {
        throw FormatError("seed: expected an unsigned integer");
      }
      req.options.master_seed = body["seed"].get<std::uint64_t>();
    }
    if (body.contains("workers")) req.options.workers = static_cast<unsigned>(detail::integer(body["workers"], "workers"));
    if (body.contains("overwrite")) req.options.overwrite = body["overwrite"].get<bool>();
    if (body.contains("noise_split")) req.noise_split = parse_pool_split(detail::string(body["noise_split"], "noise_split"));
    if (body.contains("split_seed")) req.split.seed = body["split_seed"].get<std::uint64_t>();
    if (body.contains("format")) {
      const auto f = detail::string(body["format"], "format");
      if (f == "s16") req.options.format = SampleFormat::kInt16;
      else if (f == "f32") req.options.format = SampleFormat::kFloat32;
      else throw FormatError("format: expected \"s16\" or \"f32\"");
    }
    ValidationReport refs;
    std::error_code ec;
    if (!std::filesystem::is_directory(req.clean_dir, ec)) refs.error("clean", "not a readable directory");
    if (!req.scenario.noise_sources.empty() && !std::filesystem::is_directory(req.noise_root, ec)) {
      refs.error("noise_root", "not a readable directory");
    }
    if (!refs.ok) throw InvalidScenario(std::move(refs));
    return req;
  }

  void routes() {
    server_.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, Json{{"status", "ok"}, {"version", kVersion}});
    });
    server_.Get("/api/scenario", [this](const httplib::Request&, httplib::Response& res) {
      const ScenarioConfig s = current_scenario();
      Json body = scenario_to_json(s);
      res.set_header("X-Scenario-Hash", scenario_hash(s));
      send_json(res, 200, body);
    });
    server_.Put("/api/scenario", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        ScenarioConfig s = validated(parse_json_text(req.body, "scenario"));
        {
          std::lock_guard lock(mu_);
          scenario_ = s;
        }
        res.set_header("X-Scenario-Hash", scenario_hash(s));
        send_json(res, 200, scenario_to_json(s));
      });
    });
    server_.Post("/api/preview/rir", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, preview_rir(parse_json_text(req.body, "request"))); });
    });
    server_.Post("/api/preview/mix", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { preview_mix(req, res); });
    });
    server_.Get("/api/jobs", [this](const httplib::Request&, httplib::Response& res) {
      Json out = Json::array();
      for (const auto& j : jobs_.list()) out.push_back(job_to_json(j));
      send_json(res, 200, out);
    });
    server_.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = jobs_.submit(job_request(parse_json_text(req.body, "request")));
        send_json(res, 202, Json{{"job_id", id}});
      });
    });
    server_.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto snap = jobs_.status(req.matches[1]);
      if (!snap) return send_error(res, 404, "unknown job");
      send_json(res, 200, job_to_json(*snap));
    });
    server_.Delete(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto snap = jobs_.cancel(req.matches[1]);
      if (!snap) return send_error(res, 404, "unknown job");
      send_json(res, 200, job_to_json(*snap));
    });
    if (!opts_.static_dir.empty()) {
      if (!server_.set_mount_point("/", opts_.static_dir)) {
        spdlog::warn("static directory '{}' not found; UI not served", opts_.static_dir);
      }
    }
  }

  ServiceOptions opts_;
  httplib::Server server_;
  JobQueue jobs_;
  mutable std::mutex mu_;
  ScenarioConfig scenario_;
  std::mutex pool_mu_;
  std::map<std::string, CorpusManifest> pool_cache_;
};

}  // namespace roomforge
