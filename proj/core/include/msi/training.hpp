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
#ifndef MSI_TRAINING_HPP_
#define MSI_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "msi/backbone.hpp"
#include "msi/episode.hpp"
#include "msi/metrics.hpp"
#include "msi/pipeline.hpp"
#include "msi/segmenter.hpp"
#include "msi/synthetic.hpp"
#include "msi/train_log.hpp"

namespace msi {

// Deterministic episode source: the same index always yields the same
// episode.
using EpisodeSampler = std::function<Episode(std::int64_t index)>;

// Episode i draws its class from `classes` and its content from a per-index
// seed, both derived from `seed`.
EpisodeSampler synthetic_sampler(SyntheticSpec spec, std::vector<int> classes, int k,
                                 std::uint64_t seed);

// Episode i is sample_episode over the pool with a per-index class and seed.
EpisodeSampler pool_sampler(std::shared_ptr<const std::vector<LabeledImage>> pool,
                            std::vector<int> classes, int k, std::uint64_t seed);

// Cycles through a fixed list (for example loaded episode directories).
EpisodeSampler list_sampler(std::shared_ptr<const std::vector<Episode>> episodes);

// Mean pixelwise two-class cross-entropy of the shot-averaged foreground
// probability against `gt`. When `model_grad` is non-null its gradients are
// accumulated.
double episode_loss(const SegmenterModel& model, const std::vector<SuperCorrelationMaps>& inputs,
                    const MaskBitmap& gt, SegmenterModel* model_grad = nullptr);

struct FitOptions {
  // Worker threads for validation passes.
  int workers = 1;
  std::function<void(const TrainRecord&)> on_record;
};

struct FitResult {
  SegmenterModel model;
  TrainLog log;
};

// Plain SGD, one sampled episode per step, for config.steps steps. Records
// the loss of every step and the validation mIoU every config.val_interval
// steps and after the last step. Throws NumericalError on a non-finite loss.
FitResult fit(const EpisodeSampler& train, const EpisodeSampler& val, const Backbone& backbone,
              const PipelineMode& mode, const SegmenterConfig& config,
              const FitOptions& options = {});
FitResult fit(SegmenterModel model, const EpisodeSampler& train, const EpisodeSampler& val,
              const Backbone& backbone, const SegmenterConfig& config,
              const FitOptions& options = {});

// Backbone pyramid depth, probed on a blank image of the given size.
int backbone_levels(const Backbone& backbone, int width, int height);

// Predicts and scores episodes [0, count) of `sampler`.
std::vector<EpisodeResult> evaluate_episodes(const SegmenterModel& model, const Backbone& backbone,
                                             const EpisodeSampler& sampler, int count,
                                             double threshold, int workers = 1);

}  // namespace msi

#endif  // MSI_TRAINING_HPP_
