// roomforge/pipeline.hpp

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

#include <filesystem>
#include <optional>
#include <string>

#include "roomforge/corpus.hpp"
#include "roomforge/dataset.hpp"
#include "roomforge/mixer.hpp"

namespace roomforge {

/// A dataset generation run described by directories, as issued by the
/// command line and the HTTP service.
struct GenerationRequest {
  ScenarioConfig scenario;
  std::string clean_dir;
  std::optional<CorpusLayout> clean_layout;  // detected when unset
  std::string noise_root;
  PoolSplit noise_split = PoolSplit::kAll;
  SplitSpec split;
  GenerateOptions options;
};

inline DatasetManifest run_generation(const GenerationRequest& req, const GenerationControl& control = {}) {
  const ValidationReport report = validate_scenario(req.scenario);
  if (!report.ok) throw InvalidScenario(report);
  const CorpusLayout layout = req.clean_layout.value_or(detect_layout(req.clean_dir));
  const CorpusManifest clean = ingest_corpus(req.clean_dir, layout);
  const NoisePools pools = req.scenario.noise_sources.empty()
                               ? NoisePools{}
                               : load_noise_pools(req.scenario, req.noise_root, req.noise_split, req.split);
  const WavClipSource clips;
  return generate_dataset(req.scenario, clean, pools, clips, req.options, control);
}

}  // namespace roomforge
