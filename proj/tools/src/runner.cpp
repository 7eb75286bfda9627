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
#include "msi_cli/runner.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "msi/error.hpp"
#include "msi_cli/commands.hpp"
#include "msi_cli/config.hpp"

namespace msi::cli {
namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool print_config = false;
};

ExperimentConfig resolve(const GlobalFlags& flags) {
  ExperimentConfig config =
      flags.config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(flags.config_path);
  if (flags.seed) apply_seed(config, *flags.seed);
  if (flags.workers) {
    if (*flags.workers < 1) throw ConfigError("--workers must be >= 1");
    config.workers = *flags.workers;
  }
  if (!flags.out.empty()) config.output_dir = flags.out;
  return config;
}

void add_global_flags(CLI::App& app, GlobalFlags& flags) {
  app.add_option("--config", flags.config_path, "Experiment config (JSON)");
  app.add_option("--seed", flags.seed, "Master seed; overrides the config");
  app.add_option("--workers", flags.workers, "Worker threads for episode evaluation");
  app.add_option("--out", flags.out, "Output directory; overrides the config");
  app.add_flag("--print-config", flags.print_config,
               "Print the resolved config with all defaults and exit");
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Few-shot segmentation experiment runner", "msi"};
  GlobalFlags flags;
  add_global_flags(app, flags);
  app.fallthrough();

  std::string checkpoint;
  bool oracle = false;
  std::string episode_dir;
  std::optional<int> count;

  auto* train = app.add_subcommand("train", "Train a segmenter and write checkpoint, log and plot");
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on held-out episodes");
  evaluate->add_option("--checkpoint", checkpoint,
                       "Checkpoint path (default: <out>/checkpoint.json)");
  evaluate->add_flag("--oracle", oracle, "Use ground truth as the prediction (testing aid)");
  auto* ablate = app.add_subcommand("ablate", "Run feature-combination and fusion ablations");
  auto* export_corr =
      app.add_subcommand("export-correlations", "Dump per-level correlation maps as PNG and binary");
  export_corr->add_option("--episode", episode_dir, "Episode directory to export");
  auto* synth = app.add_subcommand("synth", "Generate synthetic episode directories");
  synth->add_option("--count", count, "Number of episodes (default: synth.count)");
  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    const ExperimentConfig config = resolve(flags);
    if (flags.print_config) {
      std::cout << to_json(config).dump(2) << "\n";
      return kExitOk;
    }
    if (*train) {
      const auto a = cmd_train(config);
      std::cout << "checkpoint " << a.checkpoint.string() << "\nlog " << a.log.string()
                << "\nplot " << a.plot.string() << "\n";
    } else if (*evaluate) {
      const auto path = checkpoint.empty() ? config.output_dir / "checkpoint.json"
                                           : std::filesystem::path(checkpoint);
      const auto report = cmd_evaluate(config, path, oracle);
      std::cout << "miou " << report.mean_miou() << "\nfb_iou " << report.mean_fb_iou()
                << "\nn " << report.total_n() << "\n";
    } else if (*ablate) {
      const auto result = cmd_ablate(config);
      for (const auto& row : result.rows) {
        std::cout << row.name << " "
                  << (row.ok ? std::to_string(row.report->mean_miou()) : "failed") << "\n";
      }
      if (result.all_failed()) return kExitAblationFailed;
    } else if (*export_corr) {
      std::optional<std::filesystem::path> dir;
      if (!episode_dir.empty()) dir = episode_dir;
      for (const auto& f : cmd_export_correlations(config, dir)) std::cout << f.string() << "\n";
    } else if (*synth) {
      for (const auto& d : cmd_synth(config, count.value_or(config.synth_count))) {
        std::cout << d.string() << "\n";
      }
    } else {
      std::cerr << app.help();
      return kExitConfigError;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumericalAbort;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}

}  // namespace msi::cli
