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
#ifndef MSI_SEGMENTER_HPP_
#define MSI_SEGMENTER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "msi/backbone.hpp"
#include "msi/correlation.hpp"
#include "msi/episode.hpp"
#include "msi/layers.hpp"
#include "msi/pipeline.hpp"
#include "msi/tensor.hpp"

namespace msi {

struct SegmenterConfig {
  // Hidden units of the pooled contraction over support positions.
  int contraction_width = 8;
  // Channels of the per-level and merge convolutions.
  int merge_width = 16;
  double learning_rate = 0.1;
  // Optimizer steps; one sampled episode per step.
  int steps = 500;
  // Foreground iff probability > threshold.
  double threshold = 0.5;
  std::uint64_t seed = 0;
  // Validation every `val_interval` steps on the first `val_episodes`
  // episodes of the validation sampler; 0 disables periodic validation.
  int val_interval = 50;
  int val_episodes = 16;

  void validate() const;
  bool operator==(const SegmenterConfig&) const = default;
};

struct ParameterInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Intermediate values of one encoder forward pass, kept for backprop.
struct EncoderTape {
  std::vector<CorrelationTensor> gated;  // attention mode only
  std::vector<FeatureTensor> pooled;
  std::vector<std::vector<int>> argmax;
  std::vector<FeatureTensor> level_features;
  std::vector<FeatureTensor> merge_inputs;
  std::vector<FeatureTensor> merged;
};

// Segmentation head over correlation stacks:
//   [gate] -> pooled contraction over support axes (per level)
//          -> 3x3 conv + leaky ReLU (per level)
//          -> coarse-to-fine merge (upsample, concat, 3x3 conv + leaky ReLU)
//          -> 1x1 conv to two class logits at the finest query resolution.
// Parameters live in one flat buffer whose order is given by
// parameter_table().
class SegmenterModel {
 public:
  SegmenterModel(PipelineMode mode, int levels, const SegmenterConfig& config);

  const PipelineMode& mode() const { return mode_; }
  int levels() const { return levels_; }
  int contraction_width() const { return hidden_; }
  int merge_width() const { return width_; }
  // Channels entering the contraction layer (1 after an attention gate).
  int contraction_channels() const { return mode_.has_attention_gate() ? 1 : mode_.input_channels(); }

  std::span<double> parameters() { return values_; }
  std::span<const double> parameters() const { return values_; }
  std::span<double> gradients() { return grads_; }
  std::span<const double> gradients() const { return grads_; }
  void zero_grad();
  const std::vector<ParameterInfo>& parameter_table() const { return table_; }
  std::span<const double> parameter(const std::string& name) const;

  // Returns 2 x h0 x w0 logits (background, foreground) at the finest level's
  // query resolution. Throws ShapeError if the level count or channel count
  // does not match the model.
  FeatureTensor encode(const SuperCorrelationMaps& input, EncoderTape* tape = nullptr) const;
  // Accumulates parameter gradients for d(loss)/d(logits).
  void encode_backward(const SuperCorrelationMaps& input, const EncoderTape& tape,
                       const FeatureTensor& grad_logits);

 private:
  struct Slot {
    std::size_t weight = 0;
    std::size_t bias = 0;
  };

  std::size_t add(const std::string& name, std::vector<int> shape);
  std::span<const double> view(std::size_t index) const;
  std::span<double> grad_view(std::size_t index);
  void check_input(const SuperCorrelationMaps& input) const;

  PipelineMode mode_;
  int levels_;
  int hidden_;
  int width_;
  std::vector<ParameterInfo> table_;
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<std::size_t> gate_;
  std::vector<Slot> contract_;
  std::vector<Slot> level_conv_;
  std::vector<Slot> merge_conv_;  // merge_conv_[l] merges level l with l + 1
  Slot head_;
};

// Foreground probability per pixel from 2-channel logits, after bilinear
// upsampling to (height, width). Row-major.
std::vector<double> decode_probability(const FeatureTensor& logits, int height, int width);

struct Prediction {
  MaskBitmap mask;
  std::vector<double> probability;  // row-major, query image resolution
};

// Per-shot encoder inputs for an episode; the query pyramid is extracted once.
std::vector<SuperCorrelationMaps> episode_inputs(const Episode& episode, const PipelineMode& mode,
                                                 const Backbone& backbone);

// Averages the per-shot foreground probabilities and thresholds them.
Prediction predict(const Episode& episode, const SegmenterModel& model, const Backbone& backbone,
                   double threshold);

// Same as predict, with the mode taken from the model. Lets the ablation
// harness route any row through one entry point.
Prediction ablation_forward(const PipelineMode& mode, const Episode& episode,
                            const SegmenterModel& model, const Backbone& backbone,
                            double threshold);

// Versioned JSON checkpoint: format tag, version, mode, level count,
// segmenter config, caller-supplied config echo, and the parameter list in
// declared order.
void save_checkpoint(const std::filesystem::path& path, const SegmenterModel& model,
                     const SegmenterConfig& config, const std::string& config_echo_json);
struct LoadedCheckpoint {
  SegmenterModel model;
  SegmenterConfig config;
  std::string config_echo_json;
};
// Throws DataError on malformed files and ConfigError on version mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace msi

#endif  // MSI_SEGMENTER_HPP_
