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
#include "msi/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "msi/error.hpp"
#include "msi/rng.hpp"

namespace msi {
namespace {

using nlohmann::json;

constexpr int kConvKernel = 3;
constexpr double kLeakySlope = 0.1;
constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "msi-checkpoint";

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

json config_to_json(const SegmenterConfig& c) {
  return json{{"contraction_width", c.contraction_width},
              {"merge_width", c.merge_width},
              {"learning_rate", c.learning_rate},
              {"steps", c.steps},
              {"threshold", c.threshold},
              {"seed", c.seed},
              {"val_interval", c.val_interval},
              {"val_episodes", c.val_episodes}};
}

SegmenterConfig config_from_json(const json& j) {
  SegmenterConfig c;
  c.contraction_width = j.at("contraction_width").get<int>();
  c.merge_width = j.at("merge_width").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.steps = j.at("steps").get<int>();
  c.threshold = j.at("threshold").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.val_interval = j.at("val_interval").get<int>();
  c.val_episodes = j.at("val_episodes").get<int>();
  return c;
}

}  // namespace

void SegmenterConfig::validate() const {
  if (contraction_width < 1 || merge_width < 1) {
    throw ConfigError("segmenter widths must be >= 1");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("prediction threshold must lie strictly between 0 and 1");
  }
  if (steps < 1) throw ConfigError("segmenter step budget must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite non-negative number");
  }
  if (val_interval < 0 || val_episodes < 0) {
    throw ConfigError("validation interval and episode count must be >= 0");
  }
}

SegmenterModel::SegmenterModel(PipelineMode mode, int levels, const SegmenterConfig& config)
    : mode_(std::move(mode)),
      levels_(levels),
      hidden_(config.contraction_width),
      width_(config.merge_width) {
  config.validate();
  if (levels_ < 1) throw ConfigError("segmenter needs at least one level");
  if (mode_.input_channels() < 1) throw ConfigError("pipeline mode has no input channels");

  const int in_channels = contraction_channels();
  const int k2 = kConvKernel * kConvKernel;
  if (mode_.has_attention_gate()) {
    for (int l = 0; l < levels_; ++l) gate_.push_back(add("gate.level" + std::to_string(l), {3}));
  }
  for (int l = 0; l < levels_; ++l) {
    const std::string p = "contract.level" + std::to_string(l);
    contract_.push_back({add(p + ".weight", {hidden_, in_channels}), add(p + ".bias", {hidden_})});
  }
  for (int l = 0; l < levels_; ++l) {
    const std::string p = "level_conv.level" + std::to_string(l);
    level_conv_.push_back({add(p + ".weight", {width_, 2 * hidden_, kConvKernel, kConvKernel}),
                           add(p + ".bias", {width_})});
  }
  merge_conv_.resize(static_cast<std::size_t>(std::max(levels_ - 1, 0)));
  for (int l = levels_ - 2; l >= 0; --l) {
    const std::string p = "merge.level" + std::to_string(l);
    merge_conv_[static_cast<std::size_t>(l)] = {
        add(p + ".weight", {width_, 2 * width_, kConvKernel, kConvKernel}),
        add(p + ".bias", {width_})};
  }
  head_ = {add("head.weight", {2, width_, 1, 1}), add("head.bias", {2})};
  grads_.assign(values_.size(), 0.0);

  Rng rng(config.seed);
  auto fill_normal = [&](std::size_t index, double stddev) {
    const auto& info = table_[index];
    for (std::size_t i = 0; i < info.size; ++i) values_[info.offset + i] = stddev * rng.normal();
  };
  // Contraction units start as a bank of single-channel threshold detectors:
  // unit h reads channel h % C with a threshold spread over [0, 0.9).
  const int per_channel = (hidden_ + in_channels - 1) / in_channels;
  for (auto& slot : contract_) {
    const auto& w = table_[slot.weight];
    const auto& b = table_[slot.bias];
    for (int h = 0; h < hidden_; ++h) {
      const int channel = h % in_channels;
      const int rank = h / in_channels;
      for (int c = 0; c < in_channels; ++c) {
        const double jitter = 0.1 * rng.uniform(-1.0, 1.0);
        values_[w.offset + static_cast<std::size_t>(h * in_channels + c)] =
            (c == channel ? 1.0 : 0.0) + jitter;
      }
      values_[b.offset + static_cast<std::size_t>(h)] = -0.9 * rank / per_channel;
    }
  }
  for (auto& slot : level_conv_) fill_normal(slot.weight, std::sqrt(2.0 / (2 * hidden_ * k2)));
  for (auto& slot : merge_conv_) fill_normal(slot.weight, std::sqrt(2.0 / (2 * width_ * k2)));
  fill_normal(head_.weight, std::sqrt(1.0 / width_));
}

std::size_t SegmenterModel::add(const std::string& name, std::vector<int> shape) {
  const auto size = static_cast<std::size_t>(
      std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<>()));
  table_.push_back(ParameterInfo{name, std::move(shape), values_.size(), size});
  values_.resize(values_.size() + size, 0.0);
  return table_.size() - 1;
}

std::span<const double> SegmenterModel::view(std::size_t index) const {
  const auto& info = table_[index];
  return std::span<const double>(values_).subspan(info.offset, info.size);
}

std::span<double> SegmenterModel::grad_view(std::size_t index) {
  const auto& info = table_[index];
  return std::span<double>(grads_).subspan(info.offset, info.size);
}

std::span<const double> SegmenterModel::parameter(const std::string& name) const {
  for (std::size_t i = 0; i < table_.size(); ++i) {
    if (table_[i].name == name) return view(i);
  }
  throw ConfigError("model has no parameter '" + name + "'");
}

void SegmenterModel::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void SegmenterModel::check_input(const SuperCorrelationMaps& input) const {
  if (input.size() != levels_) {
    throw ShapeError("encoder built for " + std::to_string(levels_) + " levels received " +
                     std::to_string(input.size()));
  }
  for (int l = 0; l < levels_; ++l) {
    const auto& level = input.levels[static_cast<std::size_t>(l)];
    if (level.channels != mode_.input_channels()) {
      throw ShapeError("encoder level " + std::to_string(l) + " expects " +
                       std::to_string(mode_.input_channels()) + " channels, got " +
                       std::to_string(level.channels));
    }
  }
}

FeatureTensor SegmenterModel::encode(const SuperCorrelationMaps& input, EncoderTape* tape) const {
  check_input(input);
  EncoderTape local;
  EncoderTape& t = tape != nullptr ? *tape : local;
  const auto n = static_cast<std::size_t>(levels_);
  t.gated.assign(mode_.has_attention_gate() ? n : 0, {});
  t.pooled.assign(n, {});
  t.argmax.assign(n, {});
  t.level_features.assign(n, {});
  t.merge_inputs.assign(n, {});
  t.merged.assign(n, {});

  for (std::size_t l = 0; l < n; ++l) {
    const CorrelationTensor* x = &input.levels[l];
    if (mode_.has_attention_gate()) {
      const auto params = view(gate_[l]);
      CorrelationTensor gated(1, x->support_height, x->support_width, x->query_height,
                              x->query_width);
      const std::size_t stride = x->channel_stride();
      for (std::size_t j = 0; j < stride; ++j) {
        const double c = x->data[j];
        const double s = x->data[stride + j];
        const double g = sigmoid(params[0] * c + params[1] * s + params[2]);
        gated.data[j] = g * c + (1.0 - g) * s;
      }
      t.gated[l] = std::move(gated);
      x = &t.gated[l];
    }
    layers::support_pool_forward(*x, view(contract_[l].weight), view(contract_[l].bias), hidden_,
                                 t.pooled[l], t.argmax[l]);
    layers::conv2d_forward(t.pooled[l], view(level_conv_[l].weight), view(level_conv_[l].bias),
                           width_, kConvKernel, t.level_features[l]);
    layers::leaky_relu_inplace(t.level_features[l], kLeakySlope);
  }

  t.merged[n - 1] = t.level_features[n - 1];
  for (int l = levels_ - 2; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const auto& coarse = t.merged[li + 1];
    const auto& fine = t.level_features[li];
    const layers::BilinearResize up(coarse.height, coarse.width, fine.height, fine.width);
    t.merge_inputs[li] = layers::concat_channels(up.forward(coarse), fine);
    layers::conv2d_forward(t.merge_inputs[li], view(merge_conv_[li].weight),
                           view(merge_conv_[li].bias), width_, kConvKernel, t.merged[li]);
    layers::leaky_relu_inplace(t.merged[li], kLeakySlope);
  }

  FeatureTensor logits;
  layers::conv2d_forward(t.merged[0], view(head_.weight), view(head_.bias), 2, 1, logits);
  return logits;
}

void SegmenterModel::encode_backward(const SuperCorrelationMaps& input, const EncoderTape& tape,
                                     const FeatureTensor& grad_logits) {
  const auto n = static_cast<std::size_t>(levels_);
  std::vector<FeatureTensor> grad_merged(n);
  grad_merged[0] = FeatureTensor(width_, tape.merged[0].height, tape.merged[0].width);
  layers::conv2d_backward(tape.merged[0], view(head_.weight), grad_logits, 1,
                          grad_view(head_.weight), grad_view(head_.bias), &grad_merged[0]);

  std::vector<FeatureTensor> grad_level(n);
  for (std::size_t l = 0; l + 1 < n; ++l) {
    FeatureTensor g = grad_merged[l];
    layers::leaky_relu_backward(tape.merged[l], g, kLeakySlope);
    FeatureTensor grad_joined(tape.merge_inputs[l].channels, tape.merge_inputs[l].height,
                              tape.merge_inputs[l].width);
    layers::conv2d_backward(tape.merge_inputs[l], view(merge_conv_[l].weight), g, kConvKernel,
                            grad_view(merge_conv_[l].weight), grad_view(merge_conv_[l].bias),
                            &grad_joined);
    FeatureTensor grad_up;
    layers::split_channels(grad_joined, width_, grad_up, grad_level[l]);
    const auto& coarse = tape.merged[l + 1];
    const layers::BilinearResize up(coarse.height, coarse.width, tape.level_features[l].height,
                                    tape.level_features[l].width);
    grad_merged[l + 1] = up.backward(grad_up);
  }
  grad_level[n - 1] = grad_merged[n - 1];

  for (std::size_t l = 0; l < n; ++l) {
    FeatureTensor g = grad_level[l];
    layers::leaky_relu_backward(tape.level_features[l], g, kLeakySlope);
    FeatureTensor grad_pooled(tape.pooled[l].channels, tape.pooled[l].height,
                              tape.pooled[l].width);
    layers::conv2d_backward(tape.pooled[l], view(level_conv_[l].weight), g, kConvKernel,
                            grad_view(level_conv_[l].weight), grad_view(level_conv_[l].bias),
                            &grad_pooled);
    if (!mode_.has_attention_gate()) {
      layers::support_pool_backward(input.levels[l], view(contract_[l].weight),
                                    view(contract_[l].bias), hidden_, tape.argmax[l], grad_pooled,
                                    grad_view(contract_[l].weight), grad_view(contract_[l].bias),
                                    nullptr);
      continue;
    }
    CorrelationTensor grad_gated;
    layers::support_pool_backward(tape.gated[l], view(contract_[l].weight),
                                  view(contract_[l].bias), hidden_, tape.argmax[l], grad_pooled,
                                  grad_view(contract_[l].weight), grad_view(contract_[l].bias),
                                  &grad_gated);
    const auto params = view(gate_[l]);
    auto grad_params = grad_view(gate_[l]);
    const auto& x = input.levels[l];
    const std::size_t stride = x.channel_stride();
    double ga = 0.0, gb = 0.0, gc = 0.0;
    for (std::size_t j = 0; j < stride; ++j) {
      const double c = x.data[j];
      const double s = x.data[stride + j];
      const double g = sigmoid(params[0] * c + params[1] * s + params[2]);
      const double dz = grad_gated.data[j] * (c - s) * g * (1.0 - g);
      ga += dz * c;
      gb += dz * s;
      gc += dz;
    }
    grad_params[0] += ga;
    grad_params[1] += gb;
    grad_params[2] += gc;
  }
}

std::vector<double> decode_probability(const FeatureTensor& logits, int height, int width) {
  const layers::BilinearResize up(logits.height, logits.width, height, width);
  const FeatureTensor full = up.forward(logits);
  std::vector<double> prob(static_cast<std::size_t>(height) * width);
  const std::size_t plane = prob.size();
  for (std::size_t i = 0; i < plane; ++i) {
    prob[i] = sigmoid(full.data[plane + i] - full.data[i]);
  }
  return prob;
}

std::vector<SuperCorrelationMaps> episode_inputs(const Episode& episode, const PipelineMode& mode,
                                                 const Backbone& backbone) {
  episode.validate();
  const auto query = backbone.extract(episode.query_image, ImageRole::kQuery);
  std::vector<SuperCorrelationMaps> inputs;
  inputs.reserve(static_cast<std::size_t>(episode.shots()));
  for (int s = 0; s < episode.shots(); ++s) {
    inputs.push_back(build_encoder_input(mode, episode.support_images[static_cast<std::size_t>(s)],
                                         episode.support_masks[static_cast<std::size_t>(s)], query,
                                         backbone));
  }
  return inputs;
}

Prediction predict(const Episode& episode, const SegmenterModel& model, const Backbone& backbone,
                   double threshold) {
  const int w = episode.query_image.width;
  const int h = episode.query_image.height;
  const auto inputs = episode_inputs(episode, model.mode(), backbone);
  Prediction out;
  out.probability.assign(static_cast<std::size_t>(w) * h, 0.0);
  for (const auto& input : inputs) {
    const auto prob = decode_probability(model.encode(input), h, w);
    for (std::size_t i = 0; i < prob.size(); ++i) out.probability[i] += prob[i];
  }
  const double inv = 1.0 / static_cast<double>(inputs.size());
  out.mask = MaskBitmap(w, h);
  for (std::size_t i = 0; i < out.probability.size(); ++i) {
    out.probability[i] *= inv;
    out.mask.data[i] = out.probability[i] > threshold ? 1 : 0;
  }
  return out;
}

Prediction ablation_forward(const PipelineMode& mode, const Episode& episode,
                            const SegmenterModel& model, const Backbone& backbone,
                            double threshold) {
  if (!(mode == model.mode())) {
    throw ConfigError("model was built for mode '" + model.mode().name + "', not '" + mode.name +
                      "'");
  }
  return predict(episode, model, backbone, threshold);
}

void save_checkpoint(const std::filesystem::path& path, const SegmenterModel& model,
                     const SegmenterConfig& config, const std::string& config_echo_json) {
  json params = json::array();
  for (const auto& info : model.parameter_table()) {
    const auto values = model.parameter(info.name);
    params.push_back(json{{"name", info.name},
                          {"shape", info.shape},
                          {"values", std::vector<double>(values.begin(), values.end())}});
  }
  json doc{{"format", kCheckpointFormat},
           {"version", kCheckpointVersion},
           {"mode", model.mode().name},
           {"levels", model.levels()},
           {"segmenter", config_to_json(config)},
           {"config", config_echo_json.empty() ? json::object() : json::parse(config_echo_json)},
           {"parameters", params}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << doc.dump(1) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing checkpoint: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  if (doc.value("format", "") != kCheckpointFormat) {
    throw DataError(path.string() + " is not an msi checkpoint");
  }
  if (doc.value("version", 0) != kCheckpointVersion) {
    throw ConfigError("checkpoint version " + std::to_string(doc.value("version", 0)) +
                      " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  try {
    const auto config = config_from_json(doc.at("segmenter"));
    SegmenterModel model(parse_pipeline_mode(doc.at("mode").get<std::string>()),
                         doc.at("levels").get<int>(), config);
    const auto& params = doc.at("parameters");
    const auto& table = model.parameter_table();
    if (params.size() != table.size()) {
      throw DataError("checkpoint lists " + std::to_string(params.size()) +
                      " parameters, the model declares " + std::to_string(table.size()));
    }
    auto values = model.parameters();
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto& entry = params[i];
      if (entry.at("name").get<std::string>() != table[i].name) {
        throw DataError("checkpoint parameter " + std::to_string(i) + " is '" +
                        entry.at("name").get<std::string>() + "', expected '" + table[i].name +
                        "'");
      }
      const auto data = entry.at("values").get<std::vector<double>>();
      if (data.size() != table[i].size) {
        throw DataError("checkpoint parameter '" + table[i].name + "' has the wrong size");
      }
      std::copy(data.begin(), data.end(),
                values.begin() + static_cast<std::ptrdiff_t>(table[i].offset));
    }
    return LoadedCheckpoint{std::move(model), config, doc.at("config").dump()};
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace msi
