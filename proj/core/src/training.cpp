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
#include "msi/training.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "msi/error.hpp"
#include "msi/masking.hpp"
#include "msi/parallel.hpp"
#include "msi/rng.hpp"

namespace msi {
namespace {

constexpr double kProbFloor = 1e-12;

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::uint64_t class_stream(std::int64_t index) { return static_cast<std::uint64_t>(index) * 2; }
std::uint64_t content_stream(std::int64_t index) { return static_cast<std::uint64_t>(index) * 2 + 1; }

int pick_class(const std::vector<int>& classes, std::uint64_t seed, std::int64_t index) {
  Rng rng(derive_seed(seed, class_stream(index)));
  return classes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(classes.size()) - 1))];
}

std::string snapshot(const SegmenterModel& model, int step, double loss, int class_id) {
  double norm = 0.0;
  for (const double v : model.parameters()) norm += v * v;
  double grad_norm = 0.0;
  for (const double v : model.gradients()) grad_norm += v * v;
  std::ostringstream out;
  out << "non-finite loss at step " << step << " (loss=" << loss << ", class " << class_id
      << ", parameter L2 norm " << std::sqrt(norm) << ", gradient L2 norm "
      << std::sqrt(grad_norm) << ")";
  return out.str();
}

}  // namespace

EpisodeSampler synthetic_sampler(SyntheticSpec spec, std::vector<int> classes, int k,
                                 std::uint64_t seed) {
  spec.validate();
  if (classes.empty()) throw ConfigError("synthetic sampler needs at least one class");
  for (const int c : classes) {
    if (c < 0 || c >= spec.num_classes) {
      throw ConfigError("class " + std::to_string(c) + " is outside the synthetic vocabulary");
    }
  }
  return [spec, classes = std::move(classes), k, seed](std::int64_t index) {
    SyntheticSpec local = spec;
    local.seed = derive_seed(seed, content_stream(index));
    return generate_synthetic_episode(local, pick_class(classes, seed, index), k);
  };
}

EpisodeSampler pool_sampler(std::shared_ptr<const std::vector<LabeledImage>> pool,
                            std::vector<int> classes, int k, std::uint64_t seed) {
  if (!pool || classes.empty()) throw ConfigError("pool sampler needs a pool and classes");
  return [pool = std::move(pool), classes = std::move(classes), k, seed](std::int64_t index) {
    return sample_episode(*pool, pick_class(classes, seed, index), k,
                          derive_seed(seed, content_stream(index)));
  };
}

EpisodeSampler list_sampler(std::shared_ptr<const std::vector<Episode>> episodes) {
  if (!episodes || episodes->empty()) throw DataError("episode list is empty");
  return [episodes = std::move(episodes)](std::int64_t index) {
    return (*episodes)[static_cast<std::size_t>(index) % episodes->size()];
  };
}

double episode_loss(const SegmenterModel& model, const std::vector<SuperCorrelationMaps>& inputs,
                    const MaskBitmap& gt, SegmenterModel* model_grad) {
  if (inputs.empty()) throw ConfigError("episode has no support shots");
  const int w = gt.width;
  const int h = gt.height;
  const std::size_t pixels = static_cast<std::size_t>(w) * h;
  const double shots = static_cast<double>(inputs.size());

  std::vector<EncoderTape> tapes(inputs.size());
  std::vector<FeatureTensor> logits(inputs.size());
  std::vector<std::vector<double>> diffs(inputs.size());  // upsampled fg - bg logit
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    logits[s] = model.encode(inputs[s], model_grad != nullptr ? &tapes[s] : nullptr);
    const layers::BilinearResize up(logits[s].height, logits[s].width, h, w);
    const auto full = up.forward(logits[s]);
    diffs[s].resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) diffs[s][i] = full.data[pixels + i] - full.data[i];
  }

  double loss = 0.0;
  std::vector<std::vector<double>> grad_diff(inputs.size(), std::vector<double>(pixels, 0.0));
  if (inputs.size() == 1) {
    for (std::size_t i = 0; i < pixels; ++i) {
      const double d = diffs[0][i];
      const bool fg = gt.data[i] != 0;
      loss += fg ? softplus(-d) : softplus(d);
      grad_diff[0][i] = (1.0 / (1.0 + std::exp(-d)) - (fg ? 1.0 : 0.0)) / static_cast<double>(pixels);
    }
  } else {
    for (std::size_t i = 0; i < pixels; ++i) {
      double mean = 0.0;
      for (std::size_t s = 0; s < inputs.size(); ++s) mean += 1.0 / (1.0 + std::exp(-diffs[s][i]));
      mean = std::clamp(mean / shots, kProbFloor, 1.0 - kProbFloor);
      const bool fg = gt.data[i] != 0;
      loss += fg ? -std::log(mean) : -std::log(1.0 - mean);
      const double dmean = (fg ? -1.0 / mean : 1.0 / (1.0 - mean)) / static_cast<double>(pixels);
      for (std::size_t s = 0; s < inputs.size(); ++s) {
        const double p = 1.0 / (1.0 + std::exp(-diffs[s][i]));
        grad_diff[s][i] = dmean / shots * p * (1.0 - p);
      }
    }
  }
  loss /= static_cast<double>(pixels);

  if (model_grad != nullptr) {
    for (std::size_t s = 0; s < inputs.size(); ++s) {
      FeatureTensor grad_full(2, h, w);
      for (std::size_t i = 0; i < pixels; ++i) {
        grad_full.data[i] = -grad_diff[s][i];
        grad_full.data[pixels + i] = grad_diff[s][i];
      }
      const layers::BilinearResize up(logits[s].height, logits[s].width, h, w);
      model_grad->encode_backward(inputs[s], tapes[s], up.backward(grad_full));
    }
  }
  return loss;
}

int backbone_levels(const Backbone& backbone, int width, int height) {
  return backbone.extract(Image(width, height), ImageRole::kQuery).size();
}

std::vector<EpisodeResult> evaluate_episodes(const SegmenterModel& model, const Backbone& backbone,
                                             const EpisodeSampler& sampler, int count,
                                             double threshold, int workers) {
  std::vector<EpisodeResult> results(static_cast<std::size_t>(std::max(count, 0)));
  parallel_for(results.size(), workers, [&](std::size_t i) {
    const Episode episode = sampler(static_cast<std::int64_t>(i));
    const auto pred = predict(episode, model, backbone, threshold);
    results[i] = score_episode(episode.class_id, pred.mask, episode.query_mask,
                               mask_area_fraction(episode.support_masks.front()));
  });
  return results;
}

FitResult fit(const EpisodeSampler& train, const EpisodeSampler& val, const Backbone& backbone,
              const PipelineMode& mode, const SegmenterConfig& config, const FitOptions& options) {
  config.validate();
  const Episode probe = train(0);
  const int levels = backbone_levels(backbone, probe.query_image.width, probe.query_image.height);
  return fit(SegmenterModel(mode, levels, config), train, val, backbone, config, options);
}

FitResult fit(SegmenterModel model, const EpisodeSampler& train, const EpisodeSampler& val,
              const Backbone& backbone, const SegmenterConfig& config, const FitOptions& options) {
  config.validate();
  TrainLog log;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  for (int step = 1; step <= config.steps; ++step) {
    const Episode episode = train(step - 1);
    const auto inputs = episode_inputs(episode, model.mode(), backbone);
    model.zero_grad();
    const double loss = episode_loss(model, inputs, episode.query_mask, &model);
    if (!std::isfinite(loss)) {
      throw NumericalError(snapshot(model, step, loss, episode.class_id));
    }
    auto params = model.parameters();
    const auto grads = model.gradients();
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grads[i];

    TrainRecord record{step, loss, std::nullopt, 0.0};
    const bool validate_now = config.val_episodes > 0 && val &&
                              ((config.val_interval > 0 && step % config.val_interval == 0) ||
                               step == config.steps);
    if (validate_now) {
      const auto results = evaluate_episodes(model, backbone, val, config.val_episodes,
                                             config.threshold, options.workers);
      record.val_miou = miou(results);
    }
    record.wallclock_ms = elapsed_ms();
    log.records.push_back(record);
    if (options.on_record) options.on_record(record);
  }
  return FitResult{std::move(model), std::move(log)};
}

}  // namespace msi
