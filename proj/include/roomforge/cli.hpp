// roomforge/cli.hpp

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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "roomforge/dataset.hpp"
#include "roomforge/geometry.hpp"
#include "roomforge/pipeline.hpp"
#include "roomforge/presets.hpp"
#include "roomforge/rir.hpp"
#include "roomforge/scenario_json.hpp"
#include "roomforge/service.hpp"
#include "roomforge/version.hpp"

namespace roomforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitGeneration = 5;

/// Thrown by parse_args when the process should exit without running a
/// command: `--help` (code 0) or a usage error (code 2).
class ParseExit : public std::exception {
 public:
  ParseExit(int code, std::string text) : code_(code), text_(std::move(text)) {}
  int code() const { return code_; }
  const std::string& text() const { return text_; }
  const char* what() const noexcept override { return text_.c_str(); }

 private:
  int code_;
  std::string text_;
};

enum class Verb { kValidate, kRir, kGenerate, kPreset, kServe };

struct Command {
  Verb verb = Verb::kValidate;

  std::string scenario_path;  // validate, generate

  std::string room_path;  // rir
  Vec3 src{};
  Vec3 mic{};
  std::optional<int> max_order;
  std::optional<double> seconds;

  std::string out;  // rir, generate, preset

  std::string clean_dir;  // generate
  std::string noise_root;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool overwrite = false;
  std::string layout = "auto";
  std::string noise_split = "all";
  std::uint64_t split_seed = 0;
  std::string format = "s16";
  std::size_t verify = 10;

  std::string preset_name;  // preset

  std::string host = "0.0.0.0";  // serve
  int port = 8080;
  std::string static_dir;
};

inline Vec3 parse_position(const std::string& text) {
  Vec3 v;
  std::stringstream ss(text);
  std::string part;
  std::size_t axis = 0;
  while (std::getline(ss, part, ',')) {
    if (axis >= 3) throw std::invalid_argument("too many components");
    std::size_t used = 0;
    v[axis++] = std::stod(part, &used);
    if (used != part.size()) throw std::invalid_argument("trailing characters");
  }
  if (axis != 3) throw std::invalid_argument("expected x,y,z");
  return v;
}

inline Command parse_args(const std::vector<std::string>& args) {
  CLI::App app{"roomforge: room-acoustic noise augmentation for speech corpora", "roomforge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Command cmd;
  std::string src_text, mic_text;

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", cmd.scenario_path, "Scenario JSON")->required();

  auto* rir = app.add_subcommand("rir", "Compute one room impulse response");
  rir->add_option("--room", cmd.room_path, "Room JSON")->required();
  rir->add_option("--src", src_text, "Source position x,y,z in meters")->required();
  rir->add_option("--mic", mic_text, "Microphone position x,y,z in meters")->required();
  rir->add_option("--out", cmd.out, "Output WAV (32-bit float); a .json sidecar is written next to it")
      ->required();
  rir->add_option("--max-order", cmd.max_order, "Highest reflection order")->check(CLI::NonNegativeNumber);
  rir->add_option("--seconds", cmd.seconds, "Minimum length in seconds")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("generate", "Generate a noisy dataset");
  gen->add_option("--scenario", cmd.scenario_path, "Scenario JSON")->required();
  gen->add_option("--clean", cmd.clean_dir, "Clean speech corpus directory")->required();
  gen->add_option("--noise-root", cmd.noise_root, "Directory holding one subdirectory per noise pool");
  gen->add_option("--out", cmd.out, "Output dataset directory")->required();
  gen->add_option("--seed", cmd.seed, "Master seed");
  gen->add_option("--workers", cmd.workers, "Worker threads (0 = all cores)");
  gen->add_flag("--overwrite", cmd.overwrite, "Replace an existing dataset in --out");
  gen->add_option("--layout", cmd.layout, "Clean corpus layout")->check(CLI::IsMember({"auto", "flat", "nested"}));
  gen->add_option("--noise-split", cmd.noise_split, "Noise pool split to draw from")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  gen->add_option("--split-seed", cmd.split_seed, "Seed of the noise pool split");
  gen->add_option("--format", cmd.format, "Output sample format")->check(CLI::IsMember({"s16", "f32"}));
  gen->add_option("--verify", cmd.verify, "Records re-rendered and compared after generation");

  auto* preset = app.add_subcommand("preset", "Write a built-in scenario");
  preset->add_option("name", cmd.preset_name, "Preset name")->required()->check(CLI::IsMember(preset_names()));
  preset->add_option("--out", cmd.out, "Output file (stdout when omitted)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", cmd.host, "Bind address");
  serve->add_option("--port", cmd.port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--static", cmd.static_dir, "UI bundle directory");
  serve->add_option("--noise-root", cmd.noise_root, "Noise pools for mix previews");

  std::vector<const char*> argv{"roomforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (rir->parsed()) {
      try {
        cmd.src = parse_position(src_text);
        cmd.mic = parse_position(mic_text);
      } catch (const std::exception&) {
        throw CLI::ValidationError("--src/--mic", "positions must be given as x,y,z in meters");
      }
    }
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    const int code = app.exit(e, out, err);
    throw ParseExit(code == 0 ? kExitOk : kExitUsage, out.str() + err.str());
  }

  if (validate->parsed()) cmd.verb = Verb::kValidate;
  else if (rir->parsed()) cmd.verb = Verb::kRir;
  else if (gen->parsed()) cmd.verb = Verb::kGenerate;
  else if (preset->parsed()) cmd.verb = Verb::kPreset;
  else cmd.verb = Verb::kServe;
  return cmd;
}

/// Applies ROOMFORGE_LOG (error, warn, info, debug); default warn.
inline void configure_logging() {
  const char* env = std::getenv("ROOMFORGE_LOG");
  const std::string level = env ? env : "warn";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::warn);
}

namespace detail {

inline void print_report(const ValidationReport& r, std::ostream& out) {
  for (const auto& i : r.issues) {
    out << to_string(i.severity) << ": " << (i.path.empty() ? "" : i.path + ": ") << i.message << "\n";
  }
  out << (r.ok ? "ok" : "invalid") << " (" << r.error_count() << " errors, "
      << r.issues.size() - r.error_count() << " warnings)\n";
}

inline int run_validate(const Command& cmd, std::ostream& out) {
  const ScenarioConfig s = load_scenario_file(cmd.scenario_path);
  const ValidationReport r = validate_scenario(s);
  print_report(r, out);
  if (r.ok) out << "scenario_hash " << scenario_hash(s) << "\n";
  return r.ok ? kExitOk : kExitValidation;
}

inline int run_rir(const Command& cmd, std::ostream& out) {
  const RoomConfig room = room_from_json(read_json_file(cmd.room_path));
  ValidationReport r;
  validate_room(room, "room", r);
  if (r.ok) {
    validate_position(cmd.src, room, "src", "room", r);
    validate_position(cmd.mic, room, "mic", "room", r);
    if (cmd.src == cmd.mic) r.error("src", "source coincides with microphone");
  }
  if (!r.ok) {
    print_report(r, out);
    return kExitValidation;
  }
  const double t60 = estimate_t60(room);
  const std::size_t length = required_rir_samples(room, cmd.seconds);
  const ImpulseResponse h = compute_rir(room, cmd.src, cmd.mic, length, cmd.max_order);
  AudioClip clip;
  clip.samples = h.samples;
  clip.sample_rate = room.sample_rate;
  write_wav(cmd.out, clip, WavSpec{room.sample_rate, SampleFormat::kFloat32, 1});

  Json sidecar{{"room_hash", h.room_hash},
               {"src", {cmd.src.x, cmd.src.y, cmd.src.z}},
               {"mic", {cmd.mic.x, cmd.mic.y, cmd.mic.z}},
               {"fs", room.sample_rate},
               {"t60_estimate", t60},
               {"length", length}};
  sidecar["max_order"] = cmd.max_order ? Json(*cmd.max_order) : Json(nullptr);
  const std::string side = std::filesystem::path(cmd.out).replace_extension(".json").string();
  const std::string text = sidecar.dump(2) + "\n";
  write_bytes(side, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
  out << "t60_estimate " << t60 << " s\n"
      << "samples " << length << " at " << room.sample_rate << " Hz\n"
      << "wrote " << cmd.out << " and " << side << "\n";
  return kExitOk;
}

inline int run_generate(const Command& cmd, std::ostream& out) {
  GenerationRequest req;
  req.scenario = load_scenario_file(cmd.scenario_path);
  const ValidationReport r = validate_scenario(req.scenario);
  if (!r.ok) {
    print_report(r, out);
    return kExitValidation;
  }
  req.clean_dir = cmd.clean_dir;
  if (cmd.layout == "flat") req.clean_layout = CorpusLayout::kFlat;
  else if (cmd.layout == "nested") req.clean_layout = CorpusLayout::kNested;
  req.noise_root = cmd.noise_root;
  req.noise_split = parse_pool_split(cmd.noise_split);
  req.split.seed = cmd.split_seed;
  req.options.out_dir = cmd.out;
  req.options.master_seed = cmd.seed;
  req.options.workers = cmd.workers;
  req.options.overwrite = cmd.overwrite;
  req.options.format = cmd.format == "f32" ? SampleFormat::kFloat32 : SampleFormat::kInt16;
  req.options.verify_records = cmd.verify;

  const DatasetManifest m = run_generation(req);
  out << "master_seed " << m.master_seed << "\n"
      << "scenario_hash " << m.scenario_hash << "\n"
      << "manifest_hash " << m.manifest_hash << "\n"
      << "utterances " << m.total << " succeeded " << m.records.size() << " failed " << m.failures.size()
      << "\n";
  for (const auto& f : m.failures) out << "failed " << f.utterance_id << ": " << f.message << "\n";
  return m.failures.empty() ? kExitOk : kExitGeneration;
}

inline int run_preset(const Command& cmd, std::ostream& out) {
  const std::string text = scenario_to_json(load_preset(cmd.preset_name)).dump(2) + "\n";
  if (cmd.out.empty()) {
    out << text;
  } else {
    write_bytes(cmd.out, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
    out << "wrote " << cmd.out << "\n";
  }
  return kExitOk;
}

inline int run_serve(const Command& cmd, std::ostream& out) {
  ServiceOptions opts;
  opts.static_dir = cmd.static_dir;
  opts.noise_root = cmd.noise_root;
  Service service(opts);
  out << "listening on " << cmd.host << ":" << cmd.port << std::endl;
  if (!service.listen(cmd.host, cmd.port)) throw IoError("cannot listen on " + cmd.host + ":" + std::to_string(cmd.port));
  return kExitOk;
}

}  // namespace detail

/// Runs a parsed command. Failures map to stable exit codes: 2 usage,
/// 3 validation, 4 I/O, 5 generation failures present.
inline int execute(const Command& cmd, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    switch (cmd.verb) {
      case Verb::kValidate: return detail::run_validate(cmd, out);
      case Verb::kRir: return detail::run_rir(cmd, out);
      case Verb::kGenerate: return detail::run_generate(cmd, out);
      case Verb::kPreset: return detail::run_preset(cmd, out);
      case Verb::kServe: return detail::run_serve(cmd, out);
    }
  } catch (const InvalidScenario& e) {
    detail::print_report(e.report(), err);
    return kExitValidation;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const GeometryError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CorpusError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitGeneration;
  }
  return kExitUsage;
}

/// parse_args + execute, for main().
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Command cmd;
  try {
    cmd = parse_args(args);
  } catch (const ParseExit& e) {
    (e.code() == kExitOk ? out : err) << e.text();
    return e.code();
  }
  return execute(cmd, out, err);
}

}  // namespace roomforge::cli
