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
#include "msi/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "msi/error.hpp"
#include "msi/rng.hpp"

namespace msi {

const char* to_string(ImageRole role) {
  switch (role) {
    case ImageRole::kSupport:
      return "support";
    case ImageRole::kTarget:
      return "target";
    case ImageRole::kQuery:
      return "query";
  }
  return "unknown";
}

void FeaturePyramid::validate() const {
  if (levels.empty()) throw ShapeError("feature pyramid has no levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& level = levels[i];
    if (level.channels <= 0 || level.height <= 0 || level.width <= 0) {
      throw ShapeError("pyramid level " + std::to_string(i) + " has a zero dimension");
    }
    if (level.data.size() != static_cast<std::size_t>(level.channels) * level.height * level.width) {
      throw ShapeError("pyramid level " + std::to_string(i) +
                       " buffer does not match its declared shape");
    }
    if (i > 0 && level.spatial() > levels[i - 1].spatial()) {
      throw ShapeError("pyramid level " + std::to_string(i) +
                       " is spatially larger than the level above it");
    }
    for (const double v : level.data) {
      if (!std::isfinite(v)) {
        throw ShapeError("pyramid level " + std::to_string(i) + " contains non-finite values");
      }
    }
  }
}

FlatFeatures flatten_support(const FeatureTensor& level) {
  FlatFeatures flat{Matrix(level.spatial(), level.channels), level.height, level.width};
  for (int c = 0; c < level.channels; ++c) {
    for (int y = 0; y < level.height; ++y) {
      for (int x = 0; x < level.width; ++x) {
        flat.values.at(y * level.width + x, c) = level.at(c, y, x);
      }
    }
  }
  return flat;
}

FlatFeatures flatten_query(const FeatureTensor& level) {
  // Channel-major storage already is c x (h * w) in row-major order.
  FlatFeatures flat{Matrix(level.channels, level.spatial()), level.height, level.width};
  flat.values.data = level.data;
  return flat;
}

FeatureTensor unflatten_support(const FlatFeatures& flat) {
  if (flat.values.rows != flat.spatial()) {
    throw ShapeError("support matrix has " + std::to_string(flat.values.rows) +
                     " rows, expected " + std::to_string(flat.spatial()));
  }
  FeatureTensor level(flat.values.cols, flat.height, flat.width);
  for (int c = 0; c < flat.values.cols; ++c) {
    for (int y = 0; y < flat.height; ++y) {
      for (int x = 0; x < flat.width; ++x) {
        level.at(c, y, x) = flat.values.at(y * flat.width + x, c);
      }
    }
  }
  return level;
}

FeatureTensor unflatten_query(const FlatFeatures& flat) {
  if (flat.values.cols != flat.spatial()) {
    throw ShapeError("query matrix has " + std::to_string(flat.values.cols) +
                     " columns, expected " + std::to_string(flat.spatial()));
  }
  FeatureTensor level(flat.values.rows, flat.height, flat.width);
  level.data = flat.values.data;
  return level;
}

void ToyBackboneConfig::validate() const {
  if (channels.size() < 2) throw ConfigError("toy backbone needs at least 2 stages");
  if (channels.size() != strides.size()) {
    throw ConfigError("toy backbone channels and strides lists differ in length");
  }
  for (const int c : channels) {
    if (c < 1) throw ConfigError("toy backbone channel counts must be >= 1");
  }
  for (const int s : strides) {
    if (s < 1) throw ConfigError("toy backbone strides must be >= 1");
  }
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("toy backbone kernel must be odd");
  if (bias_scale < 0.0) throw ConfigError("toy backbone bias_scale must be >= 0");
}

int ToyBackboneConfig::total_stride() const {
  return std::accumulate(strides.begin(), strides.end(), 1, std::multiplies<>());
}

ToyBackbone::ToyBackbone(ToyBackboneConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed);
  int in_channels = Image::kChannels;
  const int taps = config_.kernel * config_.kernel;
  for (std::size_t s = 0; s < config_.channels.size(); ++s) {
    Stage stage{in_channels, config_.channels[s], config_.strides[s], {}, {}};
    const int fan_in = in_channels * taps;
    const int fan_out = stage.out_channels;
    stage.weights.resize(static_cast<std::size_t>(fan_out) * fan_in);
    for (auto& w : stage.weights) w = rng.normal();
    if (config_.zero_mean) {
      for (int r = 0; r < fan_out; ++r) {
        double* row = stage.weights.data() + static_cast<std::size_t>(r) * fan_in;
        const double mean = std::accumulate(row, row + fan_in, 0.0) / fan_in;
        for (int i = 0; i < fan_in; ++i) row[i] -= mean;
      }
    }
    if (fan_out < fan_in) {
      // Orthonormal rows via modified Gram-Schmidt.
      for (int r = 0; r < fan_out; ++r) {
        double* row = stage.weights.data() + static_cast<std::size_t>(r) * fan_in;
        for (int q = 0; q < r; ++q) {
          const double* prev = stage.weights.data() + static_cast<std::size_t>(q) * fan_in;
          double dot = 0.0;
          for (int i = 0; i < fan_in; ++i) dot += row[i] * prev[i];
          for (int i = 0; i < fan_in; ++i) row[i] -= dot * prev[i];
        }
        double norm = 0.0;
        for (int i = 0; i < fan_in; ++i) norm += row[i] * row[i];
        norm = std::sqrt(norm);
        for (int i = 0; i < fan_in; ++i) row[i] /= norm;
      }
    } else {
      const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (auto& w : stage.weights) w *= scale;
    }
    stage.bias.resize(static_cast<std::size_t>(fan_out));
    for (auto& b : stage.bias) b = config_.bias_scale * rng.normal();
    stages_.push_back(std::move(stage));
    in_channels = fan_out;
  }
}

std::vector<FeatureTensor> ToyBackbone::operator()(const Image& image) const {
  const int total = config_.total_stride();
  if (image.width % total != 0 || image.height % total != 0) {
    throw ShapeError("image is " + std::to_string(image.width) + "x" +
                     std::to_string(image.height) +
                     "; the toy backbone requires both dims divisible by " +
                     std::to_string(total));
  }
  const int k = config_.kernel;
  const int pad = k / 2;
  FeatureTensor input(Image::kChannels, image.height, image.width);
  input.data = image.data;

  std::vector<FeatureTensor> levels;
  for (const auto& stage : stages_) {
    const int out_h = input.height / stage.stride;
    const int out_w = input.width / stage.stride;
    FeatureTensor out(stage.out_channels, out_h, out_w);
    const int fan_in = stage.in_channels * k * k;
    std::vector<double> patch(static_cast<std::size_t>(fan_in));
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        std::size_t idx = 0;
        for (int c = 0; c < stage.in_channels; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = std::clamp(y * stage.stride + ky - pad, 0, input.height - 1);
            for (int kx = 0; kx < k; ++kx) {
              const int ix = std::clamp(x * stage.stride + kx - pad, 0, input.width - 1);
              patch[idx++] = input.at(c, iy, ix);
            }
          }
        }
        for (int o = 0; o < stage.out_channels; ++o) {
          const double* w = stage.weights.data() + static_cast<std::size_t>(o) * fan_in;
          double acc = stage.bias[static_cast<std::size_t>(o)];
          for (int i = 0; i < fan_in; ++i) acc += w[i] * patch[static_cast<std::size_t>(i)];
          out.at(o, y, x) = acc;
        }
      }
    }
    levels.push_back(out);
    for (auto& v : out.data) v = std::max(v, 0.0);
    input = std::move(out);
  }
  return levels;
}

Backbone::Backbone(std::string name, BackboneAdapter adapter)
    : name_(std::move(name)), adapter_(std::move(adapter)) {
  if (!adapter_) throw ConfigError("backbone '" + name_ + "' has no adapter");
}

FeaturePyramid Backbone::extract(const Image& image, ImageRole role) const {
  FeaturePyramid pyramid{adapter_(image), role};
  try {
    pyramid.validate();
  } catch (const ShapeError& e) {
    throw ShapeError("backbone '" + name_ + "' returned an invalid pyramid: " + e.what());
  }
  return pyramid;
}

Backbone make_toy_backbone(const ToyBackboneConfig& config) {
  auto net = std::make_shared<const ToyBackbone>(config);
  return Backbone("toy", [net](const Image& image) { return (*net)(image); });
}

void BackboneRegistry::register_adapter(const std::string& name, BackboneAdapter adapter) {
  if (adapters_.contains(name)) {
    throw ConfigError("backbone adapter '" + name + "' is already registered");
  }
  if (!adapter) throw ConfigError("backbone adapter '" + name + "' is empty");
  adapters_.emplace(name, std::move(adapter));
}

Backbone BackboneRegistry::resolve(const std::string& name) const {
  const auto it = adapters_.find(name);
  if (it == adapters_.end()) {
    std::string known;
    for (const auto& [key, unused] : adapters_) {
      known += known.empty() ? key : ", " + key;
    }
    throw ConfigError("unknown backbone '" + name + "'; registered: [" + known + "]");
  }
  return Backbone(name, it->second);
}

std::vector<std::string> BackboneRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [key, unused] : adapters_) out.push_back(key);
  return out;
}

}  // namespace msi
