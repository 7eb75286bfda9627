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
#include "msi_cli/config.hpp"

#include <fstream>

#include "msi/error.hpp"
#include "msi/rng.hpp"

namespace msi::cli {
namespace {

using nlohmann::json;

std::vector<std::string> all_row_names() {
  std::vector<std::string> names;
  for (const auto& list : {feature_rows(), fusion_modes()}) {
    for (const auto& m : list) names.push_back(m.name);
  }
  return names;
}

// Keys whose value may be null or of a different shape than the default.
bool is_free_form(const std::string& path) {
  return path == "/backbone/seed" || path == "/segmenter/seed" || path == "/folds/permutation" ||
         path == "/folds/test_block";
}

void check_keys(const json& patch, const json& defaults, const std::string& path) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key_path = path + "/" + it.key();
    if (!defaults.contains(it.key())) throw ConfigError("unknown config key " + key_path);
    const json& def = defaults.at(it.key());
    if (is_free_form(key_path)) continue;
    if (def.is_object()) {
      if (!it.value().is_object()) throw ConfigError(key_path + " must be an object");
      check_keys(it.value(), def, key_path);
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config value " + where + "/" + key + " has the wrong type");
  }
}

std::optional<std::uint64_t> optional_seed(const json& j, const std::string& where) {
  if (j.at("seed").is_null()) return std::nullopt;
  return get<std::uint64_t>(j, "seed", where);
}

}  // namespace

json default_config_json() {
  const ExperimentConfig d;
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = d.seed;
  j["workers"] = d.workers;
  j["output_dir"] = d.output_dir.string();
  j["backbone"] = {{"name", d.backbone_name},       {"channels", d.backbone.channels},
                   {"strides", d.backbone.strides}, {"kernel", d.backbone.kernel},
                   {"bias_scale", d.backbone.bias_scale}, {"zero_mean", d.backbone.zero_mean},
                   {"seed", nullptr}};
  const SyntheticSpec& s = d.synthetic;
  j["data"] = {{"source", "synthetic"},
               {"root", ""},
               {"synthetic",
                {{"width", s.width},
                 {"height", s.height},
                 {"num_classes", s.num_classes},
                 {"min_distractors", s.min_distractors},
                 {"max_distractors", s.max_distractors},
                 {"min_targets", s.min_targets},
                 {"max_targets", s.max_targets},
                 {"min_radius", s.min_radius},
                 {"max_radius", s.max_radius},
                 {"noise", s.noise}}}};
  j["folds"] = {{"num_classes", 4}, {"num_folds", 4}, {"fold_index", 3}, {"permutation", nullptr},
                {"test_block", nullptr}};
  j["shots"] = d.shots;
  j["pipeline"] = {{"mode", msi_mode().name}};
  const SegmenterConfig& g = d.segmenter;
  j["segmenter"] = {{"contraction_width", g.contraction_width},
                    {"merge_width", g.merge_width},
                    {"learning_rate", g.learning_rate},
                    {"steps", g.steps},
                    {"threshold", g.threshold},
                    {"val_interval", g.val_interval},
                    {"val_episodes", g.val_episodes},
                    {"seed", nullptr}};
  const EvaluationConfig& e = d.evaluation;
  j["evaluation"] = {{"episodes", e.episodes},
                     {"miou_mode", to_string(e.miou_mode)},
                     {"small_mask_threshold", e.small_mask_threshold},
                     {"convergence_target", e.convergence_target}};
  j["ablation"] = {{"rows", all_row_names()}};
  j["export"] = {{"episode_index", d.export_episode}};
  j["synth"] = {{"count", d.synth_count}};
  return j;
}

ExperimentConfig parse_config(const json& patch) {
  if (!patch.is_object()) throw ConfigError("config document must be a JSON object");
  const json defaults = default_config_json();
  check_keys(patch, defaults, "");
  json j = defaults;
  j.merge_patch(patch);
  // merge_patch drops keys patched to null; restore nullable ones.
  for (const char* section : {"backbone", "segmenter"}) {
    if (!j[section].contains("seed")) j[section]["seed"] = nullptr;
  }
  for (const char* key : {"permutation", "test_block"}) {
    if (!j["folds"].contains(key)) j["folds"][key] = nullptr;
  }

  if (get<int>(j, "schema_version", "") != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + j["schema_version"].dump() +
                      "; expected " + std::to_string(kConfigSchemaVersion));
  }

  ExperimentConfig c;
  c.seed = get<std::uint64_t>(j, "seed", "");
  c.workers = get<int>(j, "workers", "");
  c.output_dir = get<std::string>(j, "output_dir", "");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");

  const json& b = j["backbone"];
  c.backbone_name = get<std::string>(b, "name", "/backbone");
  c.backbone.channels = get<std::vector<int>>(b, "channels", "/backbone");
  c.backbone.strides = get<std::vector<int>>(b, "strides", "/backbone");
  c.backbone.kernel = get<int>(b, "kernel", "/backbone");
  c.backbone.bias_scale = get<double>(b, "bias_scale", "/backbone");
  c.backbone.zero_mean = get<bool>(b, "zero_mean", "/backbone");
  const auto backbone_seed = optional_seed(b, "/backbone");
  c.backbone_seed_explicit = backbone_seed.has_value();
  c.backbone.validate();
  if (c.backbone_name != "toy") {
    throw ConfigError("unknown backbone '" + c.backbone_name + "'; valid: toy");
  }

  const json& data = j["data"];
  const auto source = get<std::string>(data, "source", "/data");
  if (source == "synthetic") {
    c.source = DataSource::kSynthetic;
  } else if (source == "directory") {
    c.source = DataSource::kDirectory;
  } else {
    throw ConfigError("data.source must be 'synthetic' or 'directory', got '" + source + "'");
  }
  c.episode_root = get<std::string>(data, "root", "/data");
  if (c.source == DataSource::kDirectory && c.episode_root.empty()) {
    throw ConfigError("data.root is required when data.source is 'directory'");
  }
  const json& s = data["synthetic"];
  const std::string sw = "/data/synthetic";
  c.synthetic.width = get<int>(s, "width", sw);
  c.synthetic.height = get<int>(s, "height", sw);
  c.synthetic.num_classes = get<int>(s, "num_classes", sw);
  c.synthetic.min_distractors = get<int>(s, "min_distractors", sw);
  c.synthetic.max_distractors = get<int>(s, "max_distractors", sw);
  c.synthetic.min_targets = get<int>(s, "min_targets", sw);
  c.synthetic.max_targets = get<int>(s, "max_targets", sw);
  c.synthetic.min_radius = get<double>(s, "min_radius", sw);
  c.synthetic.max_radius = get<double>(s, "max_radius", sw);
  c.synthetic.noise = get<double>(s, "noise", sw);
  c.synthetic.validate();
  const int total_stride = c.backbone.total_stride();
  if (c.synthetic.width % total_stride != 0 || c.synthetic.height % total_stride != 0) {
    throw ConfigError("synthetic canvas " + std::to_string(c.synthetic.width) + "x" +
                      std::to_string(c.synthetic.height) +
                      " is not divisible by the backbone stride " + std::to_string(total_stride));
  }

  const json& f = j["folds"];
  c.fold.num_classes = get<int>(f, "num_classes", "/folds");
  c.fold.num_folds = get<int>(f, "num_folds", "/folds");
  c.fold.fold_index = get<int>(f, "fold_index", "/folds");
  if (!f["test_block"].is_null()) c.fold.test_block = get<int>(f, "test_block", "/folds");
  c.fold.validate();
  if (!f["permutation"].is_null()) {
    c.fold = remap_classes(c.fold, get<std::vector<int>>(f, "permutation", "/folds"));
  }
  if (c.source == DataSource::kSynthetic && c.fold.num_classes != c.synthetic.num_classes) {
    throw ConfigError("folds.num_classes (" + std::to_string(c.fold.num_classes) +
                      ") must equal data.synthetic.num_classes (" +
                      std::to_string(c.synthetic.num_classes) + ")");
  }

  c.shots = get<int>(j, "shots", "");
  if (c.shots < 1) throw ConfigError("shots must be >= 1");
  c.mode = parse_pipeline_mode(get<std::string>(j["pipeline"], "mode", "/pipeline"));

  const json& g = j["segmenter"];
  c.segmenter.contraction_width = get<int>(g, "contraction_width", "/segmenter");
  c.segmenter.merge_width = get<int>(g, "merge_width", "/segmenter");
  c.segmenter.learning_rate = get<double>(g, "learning_rate", "/segmenter");
  c.segmenter.steps = get<int>(g, "steps", "/segmenter");
  c.segmenter.threshold = get<double>(g, "threshold", "/segmenter");
  c.segmenter.val_interval = get<int>(g, "val_interval", "/segmenter");
  c.segmenter.val_episodes = get<int>(g, "val_episodes", "/segmenter");
  const auto segmenter_seed = optional_seed(g, "/segmenter");
  c.segmenter_seed_explicit = segmenter_seed.has_value();
  c.segmenter.validate();

  const json& e = j["evaluation"];
  c.evaluation.episodes = get<int>(e, "episodes", "/evaluation");
  c.evaluation.miou_mode = parse_miou_mode(get<std::string>(e, "miou_mode", "/evaluation"));
  c.evaluation.small_mask_threshold = get<double>(e, "small_mask_threshold", "/evaluation");
  c.evaluation.convergence_target = get<double>(e, "convergence_target", "/evaluation");
  if (c.evaluation.episodes < 1) throw ConfigError("evaluation.episodes must be >= 1");
  if (!(c.evaluation.small_mask_threshold >= 0.0 && c.evaluation.small_mask_threshold <= 1.0)) {
    throw ConfigError("evaluation.small_mask_threshold must lie in [0, 1]");
  }

  c.ablation_rows = get<std::vector<std::string>>(j["ablation"], "rows", "/ablation");
  if (c.ablation_rows.empty()) throw ConfigError("ablation.rows must not be empty");
  for (const auto& row : c.ablation_rows) parse_pipeline_mode(row);

  c.export_episode = get<int>(j["export"], "episode_index", "/export");
  c.synth_count = get<int>(j["synth"], "count", "/synth");
  if (c.export_episode < 0) throw ConfigError("export.episode_index must be >= 0");
  if (c.synth_count < 0) throw ConfigError("synth.count must be >= 0");

  c.backbone.seed = backbone_seed.value_or(0);
  c.segmenter.seed = segmenter_seed.value_or(0);
  apply_seed(c, c.seed);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j = default_config_json();
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir.string();
  j["backbone"] = {{"name", c.backbone_name},       {"channels", c.backbone.channels},
                   {"strides", c.backbone.strides}, {"kernel", c.backbone.kernel},
                   {"bias_scale", c.backbone.bias_scale}, {"zero_mean", c.backbone.zero_mean},
                   {"seed", c.backbone_seed_explicit ? json(c.backbone.seed) : json(nullptr)}};
  j["data"]["source"] = c.source == DataSource::kSynthetic ? "synthetic" : "directory";
  j["data"]["root"] = c.episode_root.string();
  auto& s = j["data"]["synthetic"];
  s["width"] = c.synthetic.width;
  s["height"] = c.synthetic.height;
  s["num_classes"] = c.synthetic.num_classes;
  s["min_distractors"] = c.synthetic.min_distractors;
  s["max_distractors"] = c.synthetic.max_distractors;
  s["min_targets"] = c.synthetic.min_targets;
  s["max_targets"] = c.synthetic.max_targets;
  s["min_radius"] = c.synthetic.min_radius;
  s["max_radius"] = c.synthetic.max_radius;
  s["noise"] = c.synthetic.noise;
  j["folds"] = {{"num_classes", c.fold.num_classes},
                {"num_folds", c.fold.num_folds},
                {"fold_index", c.fold.fold_index},
                {"permutation", c.fold.permutation ? json(*c.fold.permutation) : json(nullptr)},
                {"test_block", c.fold.test_block ? json(*c.fold.test_block) : json(nullptr)}};
  j["shots"] = c.shots;
  j["pipeline"]["mode"] = c.mode.name;
  auto& g = j["segmenter"];
  g["contraction_width"] = c.segmenter.contraction_width;
  g["merge_width"] = c.segmenter.merge_width;
  g["learning_rate"] = c.segmenter.learning_rate;
  g["steps"] = c.segmenter.steps;
  g["threshold"] = c.segmenter.threshold;
  g["val_interval"] = c.segmenter.val_interval;
  g["val_episodes"] = c.segmenter.val_episodes;
  g["seed"] = c.segmenter_seed_explicit ? json(c.segmenter.seed) : json(nullptr);
  auto& e = j["evaluation"];
  e["episodes"] = c.evaluation.episodes;
  e["miou_mode"] = to_string(c.evaluation.miou_mode);
  e["small_mask_threshold"] = c.evaluation.small_mask_threshold;
  e["convergence_target"] = c.evaluation.convergence_target;
  j["ablation"]["rows"] = c.ablation_rows;
  j["export"]["episode_index"] = c.export_episode;
  j["synth"]["count"] = c.synth_count;
  return j;
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  if (!config.backbone_seed_explicit) config.backbone.seed = stream_seed(config, SeedStream::kBackbone);
  if (!config.segmenter_seed_explicit) {
    config.segmenter.seed = stream_seed(config, SeedStream::kSegmenter);
  }
}

std::uint64_t stream_seed(const ExperimentConfig& config, SeedStream stream) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(stream));
}

}  // namespace msi::cli
