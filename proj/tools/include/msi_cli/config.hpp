/* Copyright 2026 The MSI Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef MSI_CLI_CONFIG_HPP_
#define MSI_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msi/backbone.hpp"
#include "msi/episode.hpp"
#include "msi/metrics.hpp"
#include "msi/pipeline.hpp"
#include "msi/segmenter.hpp"
#include "msi/synthetic.hpp"

namespace msi::cli {

inline constexpr int kConfigSchemaVersion = 1;

enum class DataSource { kSynthetic, kDirectory };

struct EvaluationConfig {
  int episodes = 64;
  MiouMode miou_mode = MiouMode::kPaper;
  double small_mask_threshold = 0.05;
  double convergence_target = 0.60;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir = "runs/default";
  std::string backbone_name = "toy";
  ToyBackboneConfig backbone;
  bool backbone_seed_explicit = false;
  DataSource source = DataSource::kSynthetic;
  SyntheticSpec synthetic;
  std::filesystem::path episode_root;
  FoldSpec fold;
  int shots = 1;
  PipelineMode mode;
  SegmenterConfig segmenter;
  bool segmenter_seed_explicit = false;
  EvaluationConfig evaluation;
  std::vector<std::string> ablation_rows;
  int export_episode = 0;
  int synth_count = 10;
};

// Default document, including every key a config file may set.
nlohmann::json default_config_json();

// Applies `patch` (RFC 7386 merge patch) to the defaults. Throws ConfigError
// on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const nlohmann::json& patch);
ExperimentConfig load_config(const std::filesystem::path& path);

// Fully resolved document; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);

// Sets the master seed and re-derives every component seed that the config
// file did not pin.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

// Component streams derived from the master seed.
enum class SeedStream : std::uint64_t {
  kBackbone = 1,
  kSegmenter = 2,
  kTrainEpisodes = 3,
  kValEpisodes = 4,
  kTestEpisodes = 5,
  kSynth = 6,
};
std::uint64_t stream_seed(const ExperimentConfig& config, SeedStream stream);

}  // namespace msi::cli

#endif  // MSI_CLI_CONFIG_HPP_
