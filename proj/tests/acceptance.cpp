// tests/acceptance.cpp

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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "roomforge/dataset.hpp"
#include "roomforge/pipeline.hpp"
#include "roomforge/presets.hpp"
#include "roomforge/service.hpp"
#include "test_support.hpp"

using namespace roomforge;
using namespace std::chrono_literals;
namespace rt = roomforge::testing;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      out_.pass = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void note(const std::string& text) {
    if (!out_.detail.empty()) out_.detail += ", ";
    out_.detail += text;
  }
  Outcome result() const {
    Outcome o = out_;
    if (!o.pass) o.detail = failures_ + (o.detail.empty() ? "" : " | " + o.detail);
    return o;
  }

 private:
  Outcome out_;
  std::string failures_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RoomConfig cube(double side, double beta) {
  RoomConfig r;
  r.dims = {side, side, side};
  r.wall_beta.fill(beta);
  return r;
}

Outcome direct_path() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto h = compute_rir(cube(6, 0.0), {2, 2, 2}, {4, 2, 2}, required_rir_samples(cube(6, 0.0)));
  const double elapsed = seconds_since(t0);
  const auto [pos, amp] = rt::bandlimited_peak(h.samples, 2.0 / 343.0 * 16000.0);
  const double want = 1.0 / (8.0 * kPi);
  c.expect(std::abs(pos - 93.29) <= 0.5, "peak position " + fmt("%.4f", pos));
  c.expect(std::abs(amp - want) <= 0.02 * want, "peak amplitude " + fmt("%.6f", amp));
  c.expect(elapsed < 1.0, "runtime " + fmt("%.3f s", elapsed));
  c.note("peak at " + fmt("%.3f", pos) + " samples");
  c.note("amplitude " + fmt("%.5f", amp) + " (" + fmt("%+.2f%%", 100.0 * (amp / want - 1.0)) + ")");
  c.note(fmt("%.3f s", elapsed));
  return c.result();
}

Outcome first_order() {
  Check c;
  const double beta = 0.9;
  const auto arrivals = enumerate_images(cube(6, beta), {2, 2, 2}, {4, 2, 2}, 1);
  c.expect(arrivals.size() == 7, "arrival count " + std::to_string(arrivals.size()));
  const double s20 = std::sqrt(20.0), s68 = std::sqrt(68.0);
  const double dists[] = {2.0, s20, s20, 6.0, 6.0, s68, s68};
  double worst_amp = 0.0, worst_dist = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(7, arrivals.size()); ++i) {
    const double gain = i == 0 ? 1.0 : beta;
    worst_dist = std::max(worst_dist, std::abs(arrivals[i].distance - dists[i]));
    worst_amp = std::max(worst_amp, std::abs(arrivals[i].amplitude - gain / (4.0 * kPi * dists[i])));
  }
  c.expect(worst_dist <= 1e-9, "distance error " + fmt("%.3g", worst_dist));
  c.expect(std::abs(s20 - 4.4721) < 5e-5 && std::abs(s68 - 8.2462) < 5e-5, "hand distances");
  c.expect(worst_amp <= 1e-9, "amplitude error " + fmt("%.3g", worst_amp));
  c.note(std::to_string(arrivals.size()) + " arrivals");
  c.note("max distance error " + fmt("%.2g m", worst_dist));
  c.note("max amplitude error " + fmt("%.2g", worst_amp));
  return c.result();
}

Outcome brute_force() {
  Check c;
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RoomConfig room;
    room.dims = {2.0 + 8.0 * u(g), 2.0 + 8.0 * u(g), 2.0 + 3.0 * u(g)};
    for (auto& b : room.wall_beta) b = 0.97 * u(g);
    auto inside = [&] {
      Vec3 p;
      for (std::size_t a = 0; a < 3; ++a) p[a] = 0.1 + (room.dims[a] - 0.2) * u(g);
      return p;
    };
    const Vec3 src = inside();
    Vec3 mic = inside();
    while (distance(src, mic) < 0.05) mic = inside();
    const int order = trial % 3;
    const std::size_t len = 4096;
    const auto h = compute_rir(room, src, mic, len, order);
    const auto want = rt::brute_force_rir(room, src, mic, len, order);
    worst = std::max(worst, rt::max_abs_diff(h.samples, want));
  }
  const double elapsed = seconds_since(t0);
  c.expect(worst <= 1e-9, "max deviation " + fmt("%.3g", worst));
  c.expect(elapsed < 30.0, "runtime " + fmt("%.2f s", elapsed));
  c.note("20 rooms, max per-sample deviation " + fmt("%.2g", worst));
  c.note(fmt("%.2f s", elapsed));
  return c.result();
}

Outcome convolution() {
  Check c;
  std::mt19937_64 g(7);
  std::uniform_int_distribution<std::size_t> lx(1, 4096), lh(1, 1024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(lx(g)), h(lh(g));
    for (auto& v : x) v = u(g);
    for (auto& v : h) v = u(g);
    const auto y = convolve(x, h);
    const auto want = rt::direct_convolve(x, h);
    c.expect(y.size() == want.size(), "length mismatch");
    worst = std::max(worst, rt::max_abs_diff(y, want) / rt::max_abs(want));
  }
  c.expect(worst <= 1e-6, "relative error " + fmt("%.3g", worst));
  c.note("100 pairs, max relative L-inf error " + fmt("%.2g", worst));
  return c.result();
}

struct Workspace {
  rt::TempDir dir{"acceptance"};
  std::string clean = dir.str("clean");
  std::string noise = dir.str("noise");

  GenerationRequest request(const ScenarioConfig& s, const std::string& out, unsigned workers = 1,
                            std::uint64_t seed = 42) const {
    GenerationRequest req;
    req.scenario = s;
    req.clean_dir = clean;
    req.noise_root = noise;
    req.options.out_dir = dir.str(out);
    req.options.master_seed = seed;
    req.options.workers = workers;
    req.options.verify_records = 0;
    return req;
  }
};

Outcome gain_band() {
  Check c;
  Workspace ws;
  rt::write_clean_corpus(ws.clean, 200, 0.5, 16000);
  rt::write_noise_pool(std::filesystem::path(ws.noise) / "household", 8, 1.5, 16000, 11);
  rt::write_noise_pool(std::filesystem::path(ws.noise) / "urban", 8, 0.3, 16000, 31);
  const auto s = load_preset("home");
  const auto m = run_generation(ws.request(s, "out"));
  c.expect(m.records.size() == 200 && m.failures.empty(), "generated " + std::to_string(m.records.size()));
  std::size_t draws = 0;
  double lo = 1.0, hi = 0.0, worst = 0.0;
  const WavClipSource clips;
  for (const auto& r : m.records) {
    const AudioClip speech = read_wav(r.clean_path);
    const double speech_rms = rms(speech.samples);
    for (const auto& d : r.recipe.sources) {
      ++draws;
      lo = std::min(lo, d.gain);
      hi = std::max(hi, d.gain);
      c.expect(d.gain >= 0.2 && d.gain <= 0.4, "gain " + fmt("%.6f", d.gain) + " outside band");
      // Rebuild the dry noise segment independently of the mixer.
      const AudioClip clip = read_wav(d.clip_path);
      std::vector<double> window(speech.size());
      if (clip.size() >= speech.size()) {
        for (std::size_t i = 0; i < speech.size(); ++i) window[i] = clip.samples[d.offset + i];
      } else {
        window = fit_length_at(clip, speech.size(), d.offset).samples;
      }
      const double factor = d.gain * speech_rms / rms(window);
      for (auto& v : window) v *= factor;
      const double ratio = rms(window) / speech_rms;
      worst = std::max(worst, std::abs(ratio - d.gain) / d.gain);
    }
  }
  c.expect(draws > 0, "no noise drawn");
  c.expect(worst <= 1e-6, "dry RMS ratio error " + fmt("%.3g", worst));
  c.note(std::to_string(m.records.size()) + " utterances, " + std::to_string(draws) + " noise draws");
  c.note("gains in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "]");
  c.note("max dry RMS ratio error " + fmt("%.2g", worst));
  return c.result();
}

Outcome inclusion_rate() {
  Check c;
  ScenarioConfig s;
  s.mode = MixMode::kNoRoom;
  s.noise_sources = {{"n0", SourceRole::kNoise, {}, 0.3, {0.2, 0.4}, "pool"}};
  s.microphones = {{"mic0", {}}};
  NoisePools pools;
  MemoryClipSource clips;
  CorpusManifest pool;
  pool.name = "pool";
  for (int i = 0; i < 4; ++i) {
    CorpusEntry e{"n" + std::to_string(i), "/mem/n" + std::to_string(i), std::nullopt, std::nullopt, 0.0};
    clips.add(e.path, rt::make_noise(static_cast<std::uint64_t>(i) + 1, 0.02, 16000, 0.3));
    pool.entries.push_back(e);
  }
  pools["pool"] = pool;
  const auto speech = rt::make_noise(99, 0.01, 16000, 0.3, "speech");
  std::size_t included = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto seed = derive_seed(42, "utt" + std::to_string(i));
    included += render_utterance(s, speech, pools, clips, RirCache{}, seed).recipe.sources.size();
  }
  const double rate = static_cast<double>(included) / n;
  c.expect(rate >= 0.28 && rate <= 0.32, "rate " + fmt("%.4f", rate));
  c.note("10000 renders at p = 0.3, rate " + fmt("%.4f", rate));
  return c.result();
}

Outcome determinism() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  Workspace ws;
  rt::write_clean_corpus(ws.clean, 100, 10.0, 16000);
  rt::write_noise_pool(std::filesystem::path(ws.noise) / "household", 6, 4.0, 16000, 5);
  rt::write_noise_pool(std::filesystem::path(ws.noise) / "urban", 6, 12.0, 16000, 17);
  auto s = load_preset("home");
  s.rooms[0].wall_beta.fill(0.9);
  s.max_rir_seconds = 0.5;
  const auto cache = RirCache::build(s);
  c.expect(cache.get(0, 0, 0).samples.size() == 8000, "RIR length " + std::to_string(cache.get(0, 0, 0).samples.size()));

  const auto a = run_generation(ws.request(s, "a", 1));
  const auto b = run_generation(ws.request(s, "b", 1));
  const auto w8 = run_generation(ws.request(s, "w8", 8));
  c.expect(a.records.size() == 100 && a.failures.empty(), "run a produced " + std::to_string(a.records.size()));
  c.expect(a.manifest_hash == b.manifest_hash, "manifest hash differs between repeated runs");
  c.expect(a.manifest_hash == w8.manifest_hash, "manifest hash differs between 1 and 8 workers");
  const auto ha = output_file_hashes(ws.dir.str("a"), a);
  c.expect(ha.size() == 100, "audio files " + std::to_string(ha.size()));
  c.expect(ha == output_file_hashes(ws.dir.str("b"), b), "audio hashes differ between repeated runs");
  c.expect(ha == output_file_hashes(ws.dir.str("w8"), w8), "audio hashes differ between 1 and 8 workers");
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 300.0, "runtime " + fmt("%.1f s", elapsed));
  c.note("manifest_hash " + a.manifest_hash);
  c.note("100 x 10 s, 0.5 s RIRs, 3 runs in " + fmt("%.1f s", elapsed));
  return c.result();
}

Outcome split_partition() {
  Check c;
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 2000)(g);
    const double a = u(g), b = u(g), d = u(g);
    SplitSpec spec{a / (a + b + d), b / (a + b + d), 0.0, g()};
    spec.test = std::max(0.0, 1.0 - spec.train - spec.val);
    CorpusManifest m;
    for (std::size_t i = 0; i < n; ++i) m.entries.push_back({"u" + std::to_string(i), "p", {}, {}, 0.0});
    const auto parts = split_corpus(m, spec);
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val * n + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test * n + 1e-9));
    c.expect(parts.val.size() == n_val && parts.test.size() == n_test &&
                 parts.train.size() == n - n_val - n_test,
             "sizes wrong for trial " + std::to_string(trial));
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto* p : {&parts.train, &parts.val, &parts.test}) {
      for (const auto& e : p->entries) {
        seen.insert(e.utterance_id);
        ++total;
      }
    }
    c.expect(total == n && seen.size() == n, "not a partition in trial " + std::to_string(trial));
  }
  c.note("50 random (N, fractions, seed) triples");
  return c.result();
}

Outcome cocktail_exclusion() {
  Check c;
  Workspace ws;
  const std::vector<std::string> speakers{"spk1", "spk2", "spk3", "spk4"};
  rt::write_nested_corpus(ws.clean, speakers, 10, 0.3, 16000, 1000);
  rt::write_nested_corpus(std::filesystem::path(ws.noise) / "speech", speakers, 3, 0.6, 16000, 2000);
  const auto m = run_generation(ws.request(load_preset("cocktail"), "out"));
  c.expect(m.records.size() == 40 && m.failures.empty(), "generated " + std::to_string(m.records.size()));
  std::size_t draws = 0, violations = 0;
  for (const auto& r : m.records) {
    for (const auto& d : r.recipe.sources) {
      ++draws;
      if (!d.speaker_id || !r.speaker_id || *d.speaker_id == *r.speaker_id) ++violations;
    }
  }
  c.expect(draws > 0, "no noise drawn");
  c.expect(violations == 0, std::to_string(violations) + " same-speaker draws");
  c.note(std::to_string(m.records.size()) + " utterances, " + std::to_string(draws) + " talker draws, " +
         std::to_string(violations) + " violations");
  return c.result();
}

Outcome room_coverage() {
  Check c;
  Workspace ws;
  rt::write_clean_corpus(ws.clean, 500, 0.1, 16000);
  rt::write_noise_pool(std::filesystem::path(ws.noise) / "generic", 6, 0.5, 16000);
  const auto s = load_preset("room");
  std::set<std::string> allowed;
  for (const auto& r : s.rooms) allowed.insert(room_hash(r));
  const auto m = run_generation(ws.request(s, "out"));
  c.expect(m.records.size() == 500, "generated " + std::to_string(m.records.size()));
  std::map<std::string, std::size_t> counts;
  for (const auto& r : m.records) {
    c.expect(allowed.count(r.room_hash) == 1, "unknown room hash " + r.room_hash);
    ++counts[r.room_hash];
  }
  c.expect(allowed.size() == 5 && counts.size() == 5, std::to_string(counts.size()) + " rooms used");
  std::string spread;
  for (const auto& [h, n] : counts) spread += (spread.empty() ? "" : "/") + std::to_string(n);
  c.note("500 utterances over " + std::to_string(counts.size()) + " rooms (" + spread + ")");
  return c.result();
}

Outcome service_contract() {
  Check c;
  Workspace ws;
  rt::write_clean_corpus(ws.clean, 100, 1.0, 16000);
  rt::write_noise_pool(std::filesystem::path(ws.noise) / "household", 4, 1.0, 16000);
  rt::write_noise_pool(std::filesystem::path(ws.noise) / "urban", 4, 1.0, 16000);

  Service service;
  const int port = service.bind_to_any_port("127.0.0.1");
  std::thread server([&] { service.listen_after_bind(); });
  service.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);

  RoomConfig room = cube(6, 0.5);
  const Json bad_preview{{"room", room_to_json(room)}, {"src", {2.0, 2.0, 7.0}}, {"mic", {4.0, 2.0, 2.0}}};
  auto r1 = client.Post("/api/preview/rir", bad_preview.dump(), "application/json");
  c.expect(r1 && r1->status == 422 && !Json::parse(r1->body)["issues"].empty(), "preview with source outside room");
  auto bad_scenario = scenario_to_json(load_preset("home"));
  bad_scenario["speaker"]["position"] = {7.0, 2.0, 1.0};
  auto r2 = client.Put("/api/scenario", bad_scenario.dump(), "application/json");
  c.expect(r2 && r2->status == 422, "PUT scenario with speaker outside room");
  auto r3 = client.Post("/api/jobs",
                        Json{{"scenario", bad_scenario}, {"clean", ws.clean}, {"out", ws.dir.str("x")}}.dump(),
                        "application/json");
  c.expect(r3 && r3->status == 422, "job with invalid geometry");

  auto r4 = client.Get("/api/jobs/job-unknown");
  c.expect(r4 && r4->status == 404, "unknown job status");
  auto r5 = client.Delete("/api/jobs/job-unknown");
  c.expect(r5 && r5->status == 404, "unknown job cancel");

  const Json job{{"scenario", scenario_to_json(load_preset("home"))},
                 {"clean", ws.clean},
                 {"noise_root", ws.noise},
                 {"out", ws.dir.str("job")},
                 {"seed", 42},
                 {"workers", 1}};
  auto r6 = client.Post("/api/jobs", job.dump(), "application/json");
  c.expect(r6 && r6->status == 202, "job submission");
  std::string state;
  std::size_t records = 0;
  if (r6 && r6->status == 202) {
    const std::string id = Json::parse(r6->body)["job_id"];
    const auto deadline = std::chrono::steady_clock::now() + 120s;
    // Cancel once the job has started producing records.
    while (std::chrono::steady_clock::now() < deadline) {
      const auto snap = Json::parse(client.Get("/api/jobs/" + id)->body);
      if (snap["state"] != "queued" && (snap["progress"]["processed"].get<std::size_t>() >= 3 || snap["state"] != "running")) break;
      std::this_thread::sleep_for(10ms);
    }
    client.Delete("/api/jobs/" + id);
    while (std::chrono::steady_clock::now() < deadline) {
      state = Json::parse(client.Get("/api/jobs/" + id)->body)["state"];
      if (state != "queued" && state != "running") break;
      std::this_thread::sleep_for(10ms);
    }
    c.expect(state == "cancelled", "job state after cancel: " + state);
    try {
      const auto m = read_manifest(ws.dir.str("job"));
      records = m.records.size();
      c.expect(m.state == GenerationState::kCancelled, "manifest state");
      c.expect(records < 100 && m.total == 100, "partial manifest counts");
      for (const auto& r : m.records) {
        c.expect(std::filesystem::exists(std::filesystem::path(ws.dir.str("job")) / r.output_paths[0]),
                 "missing audio for " + r.utterance_id);
      }
    } catch (const std::exception& e) {
      c.expect(false, std::string("partial manifest unreadable: ") + e.what());
    }
  }
  service.stop();
  server.join();
  c.note("422 on invalid geometry, 404 on unknown job");
  c.note("cancelled 100-utterance job left " + std::to_string(records) + " parseable records");
  return c.result();
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"direct-path oracle", direct_path},
      {"first-order mirror oracle", first_order},
      {"brute-force RIR equivalence", brute_force},
      {"convolution equivalence", convolution},
      {"noise gain band", gain_band},
      {"inclusion rate", inclusion_rate},
      {"determinism", determinism},
      {"split partition", split_partition},
      {"cocktail speaker exclusion", cocktail_exclusion},
      {"room preset coverage", room_coverage},
      {"service contract", service_contract},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
