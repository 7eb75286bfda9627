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
#ifndef MSI_PIPELINE_HPP_
#define MSI_PIPELINE_HPP_

#include <string>
#include <vector>

#include "msi/backbone.hpp"
#include "msi/correlation.hpp"
#include "msi/episode.hpp"

namespace msi {

// How the support information reaches the encoder. Feature-combination rows
// stack the selected correlation channels (order: SIF, STF, FM) under
// FusionMode::kConcat; the fusion variants all start from SIF and STF.
struct PipelineMode {
  std::string name;
  bool use_sif = true;
  bool use_stf = true;
  bool use_fm = false;
  FusionMode fusion = FusionMode::kConcat;

  // Channels per level that the encoder's first layer consumes. Attention
  // receives [C, S] and reduces them with its learnable gate.
  int input_channels() const;
  bool has_attention_gate() const { return fusion == FusionMode::kAttention; }

  bool operator==(const PipelineMode&) const = default;
};

// The default: SIF and STF correlations concatenated.
PipelineMode msi_mode();
// Feature-masking baseline: one FM channel.
PipelineMode fm_only_mode();

// The seven feature-combination rows: sif, fm, stf, fm+stf, stf+sif,
// fm+sif, fm+stf+sif.
std::vector<PipelineMode> feature_rows();
// The four fusion variants: feature_add, correlation_add, attention, concat.
std::vector<PipelineMode> fusion_modes();

// Accepts any row or fusion name. Throws ConfigError listing valid names.
PipelineMode parse_pipeline_mode(const std::string& name);

// Builds the per-level channel stack the encoder sees for one support shot.
// `query` is the query pyramid, shared across shots.
SuperCorrelationMaps build_encoder_input(const PipelineMode& mode, const Image& support_image,
                                         const MaskBitmap& support_mask,
                                         const FeaturePyramid& query, const Backbone& backbone);

}  // namespace msi

#endif  // MSI_PIPELINE_HPP_
