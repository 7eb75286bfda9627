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
#include "msi_cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "msi/correlation_export.hpp"
#include "msi/episode_io.hpp"
#include "msi/error.hpp"
#include "msi/masking.hpp"
#include "msi/rng.hpp"
#include "msi_cli/plot.hpp"

namespace msi::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

Episode truncate_shots(Episode episode, int shots, const std::string& where) {
  if (episode.shots() < shots) {
    throw ConfigError(where + " has " + std::to_string(episode.shots()) +
                      " support items; config asks for " + std::to_string(shots));
  }
  episode.support_images.resize(static_cast<std::size_t>(shots));
  episode.support_masks.resize(static_cast<std::size_t>(shots));
  return episode;
}

EpisodeSampler directory_sampler(const std::vector<fs::path>& dirs, const std::vector<int>& classes,
                                 int shots, std::uint64_t seed) {
  auto episodes = std::make_shared<std::vector<Episode>>();
  for (const auto& dir : dirs) {
    Episode e = load_episode_dir(dir);
    if (std::find(classes.begin(), classes.end(), e.class_id) == classes.end()) continue;
    episodes->push_back(truncate_shots(std::move(e), shots, dir.string()));
  }
  if (episodes->empty()) throw DataError("no episodes of the requested classes under data.root");
  Rng rng(seed);
  rng.shuffle(std::span<Episode>(*episodes));
  return list_sampler(episodes);
}

json echo_json(const ExperimentConfig& config) {
  json j = to_json(config);
  j["resolved_backbone_seed"] = config.backbone.seed;
  return j;
}

// Checkpoint copy of the config without run-location and thread settings, so
// the same experiment written to two directories gives identical files.
json checkpoint_echo(const ExperimentConfig& config) {
  json j = echo_json(config);
  j.erase("output_dir");
  j.erase("workers");
  return j;
}

json backbone_identity(const json& echo) {
  json b = echo.at("backbone");
  b["seed"] = echo.at("resolved_backbone_seed");
  return b;
}

void check_compatible(const LoadedCheckpoint& ckpt, const ExperimentConfig& config, int levels,
                      const fs::path& path) {
  const auto& m = ckpt.model;
  std::string problem;
  if (m.mode() != config.mode) {
    problem = "pipeline mode '" + m.mode().name + "' vs config '" + config.mode.name + "'";
  } else if (m.levels() != levels) {
    problem = std::to_string(m.levels()) + " levels vs backbone's " + std::to_string(levels);
  } else if (m.contraction_width() != config.segmenter.contraction_width ||
             m.merge_width() != config.segmenter.merge_width) {
    problem = "segmenter widths differ";
  } else {
    json echo;
    try {
      echo = json::parse(ckpt.config_echo_json);
    } catch (const json::exception&) {
      throw DataError("checkpoint " + path.string() + " has an unreadable config echo");
    }
    if (!echo.contains("resolved_backbone_seed") ||
        backbone_identity(echo) != backbone_identity(echo_json(config))) {
      problem = "backbone configuration or seed differs";
    }
  }
  if (!problem.empty()) {
    throw ConfigError("checkpoint " + path.string() + " does not match the config: " + problem);
  }
}

MetricsReport make_report(const ExperimentConfig& config, const std::string& label,
                          const std::vector<EpisodeResult>& results) {
  MetricsReport report;
  report.label = label;
  report.mode = config.evaluation.miou_mode;
  report.num_folds = config.fold.num_folds;
  report.shots = config.shots;
  report.folds.push_back(summarize_fold(config.fold.fold_index, results, config.evaluation.miou_mode,
                                        config.evaluation.small_mask_threshold));
  return report;
}

std::vector<EpisodeResult> oracle_results(const EpisodeSampler& sampler, int count) {
  std::vector<EpisodeResult> results;
  for (int i = 0; i < count; ++i) {
    const Episode e = sampler(i);
    results.push_back(score_episode(e.class_id, e.query_mask, e.query_mask,
                                    mask_area_fraction(e.support_masks.front())));
  }
  return results;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch != '\n' ? ch : ' ';
  }
  return out + "\"";
}

json crossing_json(const std::optional<ThresholdCrossing>& c) {
  if (!c) return json{{"step", nullptr}, {"wallclock_ms", nullptr}};
  return json{{"step", c->step}, {"wallclock_ms", c->wallclock_ms}};
}

}  // namespace

Backbone make_backbone(const ExperimentConfig& config) {
  BackboneRegistry registry;
  registry.register_adapter("toy", ToyBackbone(config.backbone));
  return registry.resolve(config.backbone_name);
}

Samplers make_samplers(const ExperimentConfig& config) {
  const FoldSplit split = split_folds(config.fold);
  if (split.train_classes.empty()) throw ConfigError("fold leaves no training classes");
  const auto train_seed = stream_seed(config, SeedStream::kTrainEpisodes);
  const auto val_seed = stream_seed(config, SeedStream::kValEpisodes);
  const auto test_seed = stream_seed(config, SeedStream::kTestEpisodes);
  if (config.source == DataSource::kSynthetic) {
    return {synthetic_sampler(config.synthetic, split.train_classes, config.shots, train_seed),
            synthetic_sampler(config.synthetic, split.test_classes, config.shots, val_seed),
            synthetic_sampler(config.synthetic, split.test_classes, config.shots, test_seed)};
  }
  const auto dirs = list_episode_dirs(config.episode_root);
  if (dirs.empty()) {
    throw DataError("no episode directories under " + config.episode_root.string());
  }
  return {directory_sampler(dirs, split.train_classes, config.shots, train_seed),
          directory_sampler(dirs, split.test_classes, config.shots, val_seed),
          directory_sampler(dirs, split.test_classes, config.shots, test_seed)};
}

TrainArtifacts cmd_train(const ExperimentConfig& config) {
  const Backbone backbone = make_backbone(config);
  const Samplers samplers = make_samplers(config);
  FitOptions options;
  options.workers = config.workers;
  FitResult result = fit(samplers.train, samplers.val, backbone, config.mode, config.segmenter, options);

  const fs::path out = config.output_dir;
  fs::create_directories(out);
  TrainArtifacts a{out / "checkpoint.json", out / "train_log.csv", out / "train_curve.png",
                   out / "config.json", std::move(result.log)};
  save_checkpoint(a.checkpoint, result.model, config.segmenter, checkpoint_echo(config).dump());
  a.train_log.write_csv(a.log);
  write_text_file(a.config, to_json(config).dump(2) + "\n");
  Panel loss{{loss_series(a.train_log, "loss", kBlue)}, 0.0, std::nullopt, std::nullopt};
  Panel val{{val_series(a.train_log, "val_miou", kOrange)},
            0.0,
            1.0,
            config.evaluation.convergence_target};
  write_plot(a.plot, {loss, val});
  return a;
}

MetricsReport cmd_evaluate(const ExperimentConfig& config, const fs::path& checkpoint, bool oracle) {
  const Samplers samplers = make_samplers(config);
  std::vector<EpisodeResult> results;
  std::string label;
  if (oracle) {
    results = oracle_results(samplers.test, config.evaluation.episodes);
    label = "oracle";
  } else {
    const Backbone backbone = make_backbone(config);
    const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
    const Episode probe = samplers.test(0);
    const int levels =
        backbone_levels(backbone, probe.query_image.width, probe.query_image.height);
    check_compatible(ckpt, config, levels, checkpoint);
    results = evaluate_episodes(ckpt.model, backbone, samplers.test, config.evaluation.episodes,
                                config.segmenter.threshold, config.workers);
    label = config.mode.name;
  }
  MetricsReport report = make_report(config, label, results);
  const fs::path out = config.output_dir;
  write_report_files(out / "report.json", out / "report.csv", report,
                     config.evaluation.small_mask_threshold);
  return report;
}

bool AblationResult::all_failed() const {
  return std::none_of(rows.begin(), rows.end(), [](const AblationRow& r) { return r.ok; });
}

AblationResult cmd_ablate(const ExperimentConfig& config) {
  const Backbone backbone = make_backbone(config);
  const Samplers samplers = make_samplers(config);
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  const double small = config.evaluation.small_mask_threshold;
  const double target = config.evaluation.convergence_target;

  AblationResult result;
  for (const auto& name : config.ablation_rows) {
    AblationRow row;
    row.name = name;
    try {
      const PipelineMode mode = parse_pipeline_mode(name);
      FitOptions options;
      options.workers = config.workers;
      FitResult fitted = fit(samplers.train, samplers.val, backbone, mode, config.segmenter, options);
      const auto results =
          evaluate_episodes(fitted.model, backbone, samplers.test, config.evaluation.episodes,
                            config.segmenter.threshold, config.workers);
      row.report = make_report(config, name, results);
      row.report->convergence = ConvergenceReport{target, time_to_threshold(fitted.log, target)};
      row.log = std::move(fitted.log);
      row.log.write_csv(out / "rows" / name / "train_log.csv");
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
      std::cerr << "ablation row " << name << " failed: " << e.what() << "\n";
    }
    result.rows.push_back(std::move(row));
  }

  std::string csv = report_csv_header(config.fold.num_folds) + ",status,error\n";
  json rows = json::array();
  for (const auto& row : result.rows) {
    json j{{"row", row.name}, {"status", row.ok ? "ok" : "failed"}};
    if (row.ok) {
      csv += report_csv_row(*row.report, small) + ",ok,\n";
      j["report"] = json::parse(report_to_json(*row.report, small));
    } else {
      csv += row.name + std::string(static_cast<std::size_t>(config.fold.num_folds) + 5, ',') +
             ",failed," + csv_escape(row.error) + "\n";
      j["error"] = row.error;
    }
    rows.push_back(std::move(j));
  }
  json doc{{"schema_version", kReportSchemaVersion}, {"rows", rows}};

  const AblationRow* msi = nullptr;
  const AblationRow* fm = nullptr;
  for (const auto& row : result.rows) {
    if (!row.ok) continue;
    if (row.name == msi_mode().name) msi = &row;
    if (row.name == fm_only_mode().name) fm = &row;
  }
  if (msi != nullptr && fm != nullptr) {
    json c{{"target", target},
           {"method", msi->name},
           {"baseline", fm->name},
           {"method_crossing", crossing_json(time_to_threshold(msi->log, target))},
           {"baseline_crossing", crossing_json(time_to_threshold(fm->log, target))}};
    const auto speedup = speedup_ratio(fm->log, msi->log, target);
    const auto step_speedup = speedup_ratio(fm->log, msi->log, target, ConvergenceClock::kSteps);
    c["speedup_wallclock"] = speedup ? json(*speedup) : json(nullptr);
    c["speedup_steps"] = step_speedup ? json(*step_speedup) : json(nullptr);
    doc["convergence"] = std::move(c);
    Panel loss{{loss_series(msi->log, msi->name, kBlue), loss_series(fm->log, fm->name, kOrange)},
               0.0, std::nullopt, std::nullopt};
    Panel val{{val_series(msi->log, msi->name, kBlue), val_series(fm->log, fm->name, kOrange)},
              0.0, 1.0, target};
    write_plot(out / "convergence.png", {loss, val});
  }
  write_text_file(out / "ablation.csv", csv);
  write_text_file(out / "ablation.json", doc.dump(2) + "\n");
  return result;
}

std::vector<fs::path> cmd_export_correlations(const ExperimentConfig& config,
                                              const std::optional<fs::path>& episode_dir) {
  const Backbone backbone = make_backbone(config);
  const Episode episode = episode_dir ? load_episode_dir(*episode_dir)
                                      : make_samplers(config).test(config.export_episode);
  const SuperCorrelationMaps scm =
      compute_msi(episode.support_images.front(), episode.support_masks.front(),
                  episode.query_image, backbone);
  const fs::path dir = config.output_dir / "correlations";
  fs::create_directories(dir);
  auto files = write_correlation_pngs(dir, scm);
  files.push_back(dir / "correlations.bin");
  write_correlation_binary(files.back(), scm);
  return files;
}

std::vector<fs::path> cmd_synth(const ExperimentConfig& config, int count) {
  if (count < 0) throw ConfigError("synth count must be >= 0");
  std::vector<int> classes(static_cast<std::size_t>(config.synthetic.num_classes));
  std::iota(classes.begin(), classes.end(), 0);
  const auto sampler = synthetic_sampler(config.synthetic, classes, config.shots,
                                         stream_seed(config, SeedStream::kSynth));
  std::vector<fs::path> dirs;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "episode_%04d", i);
    dirs.push_back(config.output_dir / name);
    save_episode_dir(sampler(i), dirs.back());
  }
  return dirs;
}

}  // namespace msi::cli
