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
#include "msi/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "msi/error.hpp"
#include "msi/masking.hpp"

namespace msi {
namespace {

CorrelationPyramid add_correlations(const CorrelationPyramid& a, const CorrelationPyramid& b) {
  CorrelationPyramid out{a.levels, CorrelationSource::kCorrelationSum};
  for (std::size_t i = 0; i < out.levels.size(); ++i) {
    auto& level = out.levels[i];
    const auto& other = b.levels[i];
    for (std::size_t j = 0; j < level.data.size(); ++j) level.data[j] += other.data[j];
  }
  return out;
}

FeaturePyramid add_features(const FeaturePyramid& a, const FeaturePyramid& b) {
  if (a.size() != b.size()) throw ShapeError("cannot add pyramids with different depths");
  FeaturePyramid out = a;
  for (std::size_t i = 0; i < out.levels.size(); ++i) {
    auto& level = out.levels[i];
    const auto& other = b.levels[i];
    if (level.channels != other.channels || level.height != other.height ||
        level.width != other.width) {
      throw ShapeError("cannot add pyramids: level " + std::to_string(i) + " shapes differ");
    }
    for (std::size_t j = 0; j < level.data.size(); ++j) level.data[j] += other.data[j];
  }
  return out;
}

SuperCorrelationMaps single_channel(CorrelationPyramid pyramid) {
  return SuperCorrelationMaps{std::move(pyramid.levels), {pyramid.source}};
}

}  // namespace

const char* to_string(CorrelationSource source) {
  switch (source) {
    case CorrelationSource::kSupportImage:
      return "sif";
    case CorrelationSource::kSupportTarget:
      return "stf";
    case CorrelationSource::kFeatureMasked:
      return "fm";
    case CorrelationSource::kFeatureSum:
      return "feature_sum";
    case CorrelationSource::kCorrelationSum:
      return "correlation_sum";
    case CorrelationSource::kAttention:
      return "attention";
  }
  return "unknown";
}

CorrelationTensor::CorrelationTensor(int c, int sh, int sw, int qh, int qw, double fill)
    : channels(c),
      support_height(sh),
      support_width(sw),
      query_height(qh),
      query_width(qw),
      data(static_cast<std::size_t>(c) * sh * sw * qh * qw, fill) {}

bool CorrelationTensor::same_geometry(const CorrelationTensor& other) const {
  return support_height == other.support_height && support_width == other.support_width &&
         query_height == other.query_height && query_width == other.query_width;
}

std::string CorrelationTensor::shape_string() const {
  return std::to_string(channels) + "x" + std::to_string(support_height) + "x" +
         std::to_string(support_width) + "x" + std::to_string(query_height) + "x" +
         std::to_string(query_width);
}

CorrelationTensor cosine_correlation(const FlatFeatures& support, const FlatFeatures& query,
                                     double eps) {
  const Matrix& s = support.values;
  const Matrix& q = query.values;
  if (s.cols != q.rows) {
    throw ShapeError("support features have " + std::to_string(s.cols) +
                     " channels but query features have " + std::to_string(q.rows));
  }
  if (s.rows != support.spatial() || q.cols != query.spatial()) {
    throw ShapeError("flattened features do not match their spatial dims");
  }
  if (!(eps > 0.0)) throw ShapeError("norm floor eps must be positive");
  const int channels = s.cols;
  const int np = s.rows;
  const int nq = q.cols;

  // Normalize support rows and query columns, then one matrix product.
  std::vector<double> support_unit(s.data);
  for (int p = 0; p < np; ++p) {
    double norm = 0.0;
    for (int c = 0; c < channels; ++c) norm += s.at(p, c) * s.at(p, c);
    const double inv = 1.0 / std::max(std::sqrt(norm), eps);
    for (int c = 0; c < channels; ++c) support_unit[static_cast<std::size_t>(p) * channels + c] *= inv;
  }
  std::vector<double> query_inv(static_cast<std::size_t>(nq), 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int j = 0; j < nq; ++j) query_inv[static_cast<std::size_t>(j)] += q.at(c, j) * q.at(c, j);
  }
  for (auto& v : query_inv) v = 1.0 / std::max(std::sqrt(v), eps);
  std::vector<double> query_unit(q.data);
  for (int c = 0; c < channels; ++c) {
    double* row = query_unit.data() + static_cast<std::size_t>(c) * nq;
    for (int j = 0; j < nq; ++j) row[j] *= query_inv[static_cast<std::size_t>(j)];
  }

  CorrelationTensor out(1, support.height, support.width, query.height, query.width);
  for (int p = 0; p < np; ++p) {
    double* dst = out.data.data() + static_cast<std::size_t>(p) * nq;
    for (int c = 0; c < channels; ++c) {
      const double a = support_unit[static_cast<std::size_t>(p) * channels + c];
      const double* src = query_unit.data() + static_cast<std::size_t>(c) * nq;
      for (int j = 0; j < nq; ++j) dst[j] += a * src[j];
    }
    for (int j = 0; j < nq; ++j) dst[j] = std::max(dst[j], 0.0);
  }
  return out;
}

CorrelationTensor oracle_correlation(const FeatureTensor& support, const FeatureTensor& query,
                                     double eps) {
  if (support.channels != query.channels) {
    throw ShapeError("oracle: channel mismatch");
  }
  CorrelationTensor out(1, support.height, support.width, query.height, query.width);
  for (int sy = 0; sy < support.height; ++sy) {
    for (int sx = 0; sx < support.width; ++sx) {
      for (int qy = 0; qy < query.height; ++qy) {
        for (int qx = 0; qx < query.width; ++qx) {
          double dot = 0.0;
          double ns = 0.0;
          double nq = 0.0;
          for (int c = 0; c < support.channels; ++c) {
            const double f = support.at(c, sy, sx);
            const double g = query.at(c, qy, qx);
            dot += f * g;
            ns += f * f;
            nq += g * g;
          }
          const double cosine = dot / (std::max(std::sqrt(ns), eps) * std::max(std::sqrt(nq), eps));
          out.at(0, sy * support.width + sx, qy * query.width + qx) = cosine > 0.0 ? cosine : 0.0;
        }
      }
    }
  }
  return out;
}

CorrelationPyramid correlate_pyramids(const FeaturePyramid& support, const FeaturePyramid& query,
                                      CorrelationSource source, double eps) {
  if (support.size() != query.size()) {
    throw ShapeError("support pyramid has " + std::to_string(support.size()) +
                     " levels but query pyramid has " + std::to_string(query.size()));
  }
  CorrelationPyramid out{{}, source};
  out.levels.reserve(support.levels.size());
  for (std::size_t i = 0; i < support.levels.size(); ++i) {
    out.levels.push_back(cosine_correlation(flatten_support(support.levels[i]),
                                            flatten_query(query.levels[i]), eps));
  }
  return out;
}

SuperCorrelationMaps stack_channels(const std::vector<const CorrelationPyramid*>& parts) {
  if (parts.empty()) throw ShapeError("nothing to stack");
  const std::size_t depth = parts.front()->levels.size();
  SuperCorrelationMaps out;
  for (const auto* part : parts) {
    if (part->levels.size() != depth) {
      throw ShapeError("correlation pyramids differ in depth (" + std::to_string(depth) +
                       " vs " + std::to_string(part->levels.size()) + ")");
    }
    out.channel_sources.push_back(part->source);
  }
  const int channels = static_cast<int>(parts.size());
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& first = parts.front()->levels[i];
    CorrelationTensor level(channels, first.support_height, first.support_width,
                            first.query_height, first.query_width);
    for (int c = 0; c < channels; ++c) {
      const auto& src = parts[static_cast<std::size_t>(c)]->levels[i];
      if (src.channels != 1 || !src.same_geometry(first)) {
        throw ShapeError("level " + std::to_string(i) + ": cannot stack " + src.shape_string() +
                         " with " + first.shape_string());
      }
      std::copy(src.data.begin(), src.data.end(),
                level.data.begin() + static_cast<std::ptrdiff_t>(c * level.channel_stride()));
    }
    out.levels.push_back(std::move(level));
  }
  return out;
}

SuperCorrelationMaps build_scm(const CorrelationPyramid& sif, const CorrelationPyramid& stf) {
  return stack_channels({&sif, &stf});
}

SuperCorrelationMaps compute_msi(const Image& support_image, const MaskBitmap& support_mask,
                                 const Image& query_image, const Backbone& backbone) {
  const Image target_image = mask_image(support_image, support_mask);
  const auto sif = backbone.extract(support_image, ImageRole::kSupport);
  const auto stf = backbone.extract(target_image, ImageRole::kTarget);
  const auto qf = backbone.extract(query_image, ImageRole::kQuery);
  return build_scm(correlate_pyramids(sif, qf, CorrelationSource::kSupportImage),
                   correlate_pyramids(stf, qf, CorrelationSource::kSupportTarget));
}

const char* to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kFeatureAdd:
      return "feature_add";
    case FusionMode::kCorrelationAdd:
      return "correlation_add";
    case FusionMode::kAttention:
      return "attention";
    case FusionMode::kConcat:
      return "concat";
  }
  return "unknown";
}

FusionMode parse_fusion_mode(const std::string& name) {
  for (const auto mode : {FusionMode::kFeatureAdd, FusionMode::kCorrelationAdd,
                          FusionMode::kAttention, FusionMode::kConcat}) {
    if (name == to_string(mode)) return mode;
  }
  throw ConfigError("unknown fusion mode '" + name +
                    "'; valid: feature_add, correlation_add, attention, concat");
}

double AttentionGate::value(std::size_t level, double c_value, double s_value) const {
  if (frozen) return *frozen;
  const auto& [a, b, c] = level_params.at(level);
  return 1.0 / (1.0 + std::exp(-(a * c_value + b * s_value + c)));
}

SuperCorrelationMaps fuse(FusionMode mode, const FusionInputs& inputs, const AttentionGate* gate,
                          double eps) {
  switch (mode) {
    case FusionMode::kFeatureAdd:
      return single_channel(correlate_pyramids(add_features(inputs.support, inputs.target),
                                               inputs.query, CorrelationSource::kFeatureSum, eps));
    case FusionMode::kConcat:
      return build_scm(
          correlate_pyramids(inputs.support, inputs.query, CorrelationSource::kSupportImage, eps),
          correlate_pyramids(inputs.target, inputs.query, CorrelationSource::kSupportTarget, eps));
    case FusionMode::kCorrelationAdd:
    case FusionMode::kAttention:
      break;
  }
  const auto c = correlate_pyramids(inputs.support, inputs.query,
                                    CorrelationSource::kSupportImage, eps);
  const auto s = correlate_pyramids(inputs.target, inputs.query,
                                    CorrelationSource::kSupportTarget, eps);
  if (mode == FusionMode::kCorrelationAdd) return single_channel(add_correlations(c, s));

  if (gate == nullptr) throw ConfigError("attention fusion needs gate parameters");
  if (!gate->frozen && gate->level_params.size() != c.levels.size()) {
    throw ConfigError("attention gate has " + std::to_string(gate->level_params.size()) +
                      " levels, correlations have " + std::to_string(c.levels.size()));
  }
  CorrelationPyramid blended{c.levels, CorrelationSource::kAttention};
  for (std::size_t i = 0; i < blended.levels.size(); ++i) {
    auto& level = blended.levels[i];
    const auto& sl = s.levels[i];
    for (std::size_t j = 0; j < level.data.size(); ++j) {
      const double g = gate->value(i, level.data[j], sl.data[j]);
      level.data[j] = g * level.data[j] + (1.0 - g) * sl.data[j];
    }
  }
  return single_channel(std::move(blended));
}

}  // namespace msi
