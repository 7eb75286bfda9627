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
#ifndef MSI_BACKBONE_HPP_
#define MSI_BACKBONE_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "msi/tensor.hpp"

namespace msi {

// Which image a pyramid was extracted from: the full support image, the
// input-masked support image, or the query image.
enum class ImageRole { kSupport, kTarget, kQuery };

const char* to_string(ImageRole role);

// Multi-level backbone output. Level 0 is the finest (largest spatial size).
struct FeaturePyramid {
  std::vector<FeatureTensor> levels;
  ImageRole role = ImageRole::kSupport;

  int size() const { return static_cast<int>(levels.size()); }

  // N >= 1, non-increasing spatial size with depth, buffer sizes matching
  // the declared dims and finite values.
  void validate() const;

  bool operator==(const FeaturePyramid&) const = default;
};

// A level reshaped for matrix products, remembering its spatial dims.
// Support side: values is (h * w) x c and row p = y * w + x holds the feature
// at (y, x). Query side: values is c x (h * w) with column q = y * w + x.
struct FlatFeatures {
  Matrix values;
  int height = 0;
  int width = 0;

  int spatial() const { return height * width; }
};

FlatFeatures flatten_support(const FeatureTensor& level);
FlatFeatures flatten_query(const FeatureTensor& level);
FeatureTensor unflatten_support(const FlatFeatures& flat);
FeatureTensor unflatten_query(const FlatFeatures& flat);

struct ToyBackboneConfig {
  std::vector<int> channels{8, 16, 32};
  std::vector<int> strides{2, 2, 2};
  int kernel = 3;
  // Standard deviation of the seeded biases. 0 makes all-black inputs map to
  // all-zero features at every level.
  double bias_scale = 0.0;
  // Filters sum to zero, so flat regions of equal intensity across channels
  // respond with zero.
  bool zero_mean = true;
  std::uint64_t seed = 0;

  void validate() const;
  int total_stride() const;
};

// Stacked strided convolutions with replicate padding and a ReLU between
// stages. Each stage's pre-activation output is tapped as one pyramid level.
// Weights are fixed at construction.
class ToyBackbone {
 public:
  explicit ToyBackbone(ToyBackboneConfig config);

  std::vector<FeatureTensor> operator()(const Image& image) const;

  const ToyBackboneConfig& config() const { return config_; }

 private:
  struct Stage {
    int in_channels;
    int out_channels;
    int stride;
    std::vector<double> weights;  // [out][in][ky][kx]
    std::vector<double> bias;
  };

  ToyBackboneConfig config_;
  std::vector<Stage> stages_;
};

// Image in, ordered level list out (finest first).
using BackboneAdapter = std::function<std::vector<FeatureTensor>(const Image&)>;

// A named adapter whose outputs are validated on every call.
class Backbone {
 public:
  Backbone(std::string name, BackboneAdapter adapter);

  const std::string& name() const { return name_; }
  FeaturePyramid extract(const Image& image, ImageRole role) const;

 private:
  std::string name_;
  BackboneAdapter adapter_;
};

Backbone make_toy_backbone(const ToyBackboneConfig& config);

class BackboneRegistry {
 public:
  // Throws ConfigError if `name` is already registered.
  void register_adapter(const std::string& name, BackboneAdapter adapter);
  // Throws ConfigError listing the registered names if `name` is unknown.
  Backbone resolve(const std::string& name) const;
  std::vector<std::string> names() const;
  bool contains(const std::string& name) const { return adapters_.contains(name); }

 private:
  std::map<std::string, BackboneAdapter> adapters_;
};

inline FeaturePyramid extract_pyramid(const Image& image, const Backbone& backbone,
                                      ImageRole role) {
  return backbone.extract(image, role);
}

}  // namespace msi

#endif  // MSI_BACKBONE_HPP_
