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
#ifndef MSI_CLI_COMMANDS_HPP_
#define MSI_CLI_COMMANDS_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msi/backbone.hpp"
#include "msi/report.hpp"
#include "msi/segmenter.hpp"
#include "msi/train_log.hpp"
#include "msi/training.hpp"
#include "msi_cli/config.hpp"

namespace msi::cli {

Backbone make_backbone(const ExperimentConfig& config);

struct Samplers {
  EpisodeSampler train;
  EpisodeSampler val;
  EpisodeSampler test;
};

// Train episodes come from the fold's train classes, validation and test
// episodes from its test classes, each on its own seed stream.
Samplers make_samplers(const ExperimentConfig& config);

struct TrainArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::filesystem::path plot;
  std::filesystem::path config;
  TrainLog train_log;
};

// Writes checkpoint.json, train_log.csv, train_curve.png and config.json under
// config.output_dir.
TrainArtifacts cmd_train(const ExperimentConfig& config);

// Scores the fold's test episodes and writes report.json and report.csv.
// `oracle` replaces predictions by the ground truth (testing aid). Throws
// ConfigError when the checkpoint does not match the config.
MetricsReport cmd_evaluate(const ExperimentConfig& config,
                           const std::filesystem::path& checkpoint, bool oracle = false);

struct AblationRow {
  std::string name;
  bool ok = false;
  std::string error;
  std::optional<MetricsReport> report;
  TrainLog log;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  bool all_failed() const;
};

// Trains and evaluates every configured row under identical seeds. Writes
// ablation.json, ablation.csv, per-row train logs and convergence.png.
AblationResult cmd_ablate(const ExperimentConfig& config);

// Writes level<i>_ch<c>.png per SCM level and channel plus correlations.bin
// into <output_dir>/correlations. Uses the episode directory when given,
// otherwise test episode export.episode_index.
std::vector<std::filesystem::path> cmd_export_correlations(
    const ExperimentConfig& config, const std::optional<std::filesystem::path>& episode_dir);

// Writes `count` synthetic episode directories episode_NNNN under the output
// directory.
std::vector<std::filesystem::path> cmd_synth(const ExperimentConfig& config, int count);

}  // namespace msi::cli

#endif  // MSI_CLI_COMMANDS_HPP_
