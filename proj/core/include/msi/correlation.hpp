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
#ifndef MSI_CORRELATION_HPP_
#define MSI_CORRELATION_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "msi/backbone.hpp"
#include "msi/tensor.hpp"

namespace msi {

// Norm floor in the cosine denominator. Zero vectors correlate to 0.
inline constexpr double kNormFloor = 1e-8;

// What a correlation channel was computed from.
enum class CorrelationSource {
  kSupportImage,   // full support image features vs query (SIF)
  kSupportTarget,  // input-masked support image features vs query (STF)
  kFeatureMasked,  // feature-masked support features vs query (FM)
  kFeatureSum,     // (SIF + STF) features vs query
  kCorrelationSum,
  kAttention,
};

const char* to_string(CorrelationSource source);

// Per-level 4D correlation with a channel axis. Axis order is
// (channel, support-y, support-x, query-y, query-x); element (c, p, q) with
// p = sy * support_width + sx and q = qy * query_width + qx lives at
// (c * P + p) * Q + q.
struct CorrelationTensor {
  int channels = 1;
  int support_height = 0;
  int support_width = 0;
  int query_height = 0;
  int query_width = 0;
  std::vector<double> data;

  CorrelationTensor() = default;
  CorrelationTensor(int c, int sh, int sw, int qh, int qw, double fill = 0.0);

  int support_size() const { return support_height * support_width; }
  int query_size() const { return query_height * query_width; }
  std::size_t channel_stride() const {
    return static_cast<std::size_t>(support_size()) * query_size();
  }
  double& at(int c, int p, int q) {
    return data[c * channel_stride() + static_cast<std::size_t>(p) * query_size() + q];
  }
  double at(int c, int p, int q) const {
    return data[c * channel_stride() + static_cast<std::size_t>(p) * query_size() + q];
  }
  bool same_geometry(const CorrelationTensor& other) const;
  std::string shape_string() const;

  bool operator==(const CorrelationTensor&) const = default;
};

// Single-channel correlation per level, tagged with its source.
struct CorrelationPyramid {
  std::vector<CorrelationTensor> levels;
  CorrelationSource source = CorrelationSource::kSupportImage;
};

// Per-level channel stack fed to the encoder. The MSI configuration has two
// channels: 0 = SIF-based, 1 = STF-based.
struct SuperCorrelationMaps {
  std::vector<CorrelationTensor> levels;
  std::vector<CorrelationSource> channel_sources;

  int size() const { return static_cast<int>(levels.size()); }
  int channels() const { return static_cast<int>(channel_sources.size()); }

  bool operator==(const SuperCorrelationMaps&) const = default;
};

// ReLU(<f_p, g_q> / (max(|f_p|, eps) * max(|g_q|, eps))) for every support
// position p and query position q. Throws ShapeError on channel mismatch.
CorrelationTensor cosine_correlation(const FlatFeatures& support, const FlatFeatures& query,
                                     double eps = kNormFloor);

// Reference implementation of cosine_correlation: an explicit loop over all
// position pairs computing dot product and norms directly from the level
// tensors. Slow by construction; used only to check the fast path.
CorrelationTensor oracle_correlation(const FeatureTensor& support, const FeatureTensor& query,
                                     double eps = kNormFloor);

// Level-wise cosine_correlation between two pyramids.
CorrelationPyramid correlate_pyramids(const FeaturePyramid& support, const FeaturePyramid& query,
                                      CorrelationSource source, double eps = kNormFloor);

// Concatenates single-channel pyramids along the channel axis, in order.
// Throws ShapeError naming the first level whose geometry differs.
SuperCorrelationMaps stack_channels(const std::vector<const CorrelationPyramid*>& parts);

// [C (+) S]: channel 0 = C (SIF-based), channel 1 = S (STF-based).
SuperCorrelationMaps build_scm(const CorrelationPyramid& sif, const CorrelationPyramid& stf);

// Mask the support image, extract SIF/STF/QF pyramids, correlate both
// support pyramids with the query pyramid and stack the results.
SuperCorrelationMaps compute_msi(const Image& support_image, const MaskBitmap& support_mask,
                                 const Image& query_image, const Backbone& backbone);

enum class FusionMode { kFeatureAdd, kCorrelationAdd, kAttention, kConcat };

const char* to_string(FusionMode mode);
// Throws ConfigError listing the valid names.
FusionMode parse_fusion_mode(const std::string& name);

// Pointwise gate g = sigmoid(a * C + b * S + c) per level, blending
// g * C + (1 - g) * S. A frozen value replaces the computed gate everywhere.
struct AttentionGate {
  std::vector<std::array<double, 3>> level_params;  // (a, b, c)
  std::optional<double> frozen;

  double value(std::size_t level, double c_value, double s_value) const;
};

struct FusionInputs {
  FeaturePyramid support;  // SIF
  FeaturePyramid target;   // STF
  FeaturePyramid query;    // QF
};

// Combines SIF and STF information by `mode`. kConcat is build_scm; the
// other modes produce one channel per level. kAttention needs `gate`.
SuperCorrelationMaps fuse(FusionMode mode, const FusionInputs& inputs,
                          const AttentionGate* gate = nullptr, double eps = kNormFloor);

}  // namespace msi

#endif  // MSI_CORRELATION_HPP_
