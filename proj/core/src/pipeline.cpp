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
#include "msi/pipeline.hpp"

#include "msi/error.hpp"
#include "msi/masking.hpp"

namespace msi {
namespace {

PipelineMode row(std::string name, bool fm, bool stf, bool sif) {
  return PipelineMode{std::move(name), sif, stf, fm, FusionMode::kConcat};
}

PipelineMode fusion(FusionMode mode) {
  return PipelineMode{to_string(mode), true, true, false, mode};
}

}  // namespace

int PipelineMode::input_channels() const {
  switch (fusion) {
    case FusionMode::kFeatureAdd:
    case FusionMode::kCorrelationAdd:
      return 1;
    case FusionMode::kAttention:
      return 2;
    case FusionMode::kConcat:
      break;
  }
  return static_cast<int>(use_sif) + static_cast<int>(use_stf) + static_cast<int>(use_fm);
}

PipelineMode msi_mode() { return row("stf+sif", false, true, true); }

PipelineMode fm_only_mode() { return row("fm", true, false, false); }

std::vector<PipelineMode> feature_rows() {
  return {
      row("sif", false, false, true),     row("fm", true, false, false),
      row("stf", false, true, false),     row("fm+stf", true, true, false),
      row("stf+sif", false, true, true),  row("fm+sif", true, false, true),
      row("fm+stf+sif", true, true, true),
  };
}

std::vector<PipelineMode> fusion_modes() {
  return {fusion(FusionMode::kFeatureAdd), fusion(FusionMode::kCorrelationAdd),
          fusion(FusionMode::kAttention), fusion(FusionMode::kConcat)};
}

PipelineMode parse_pipeline_mode(const std::string& name) {
  std::string valid;
  for (const auto& list : {feature_rows(), fusion_modes()}) {
    for (const auto& mode : list) {
      if (mode.name == name) return mode;
      valid += valid.empty() ? mode.name : ", " + mode.name;
    }
  }
  throw ConfigError("unknown pipeline mode '" + name + "'; valid: " + valid);
}

SuperCorrelationMaps build_encoder_input(const PipelineMode& mode, const Image& support_image,
                                         const MaskBitmap& support_mask,
                                         const FeaturePyramid& query, const Backbone& backbone) {
  if (mode.input_channels() < 1) {
    throw ConfigError("pipeline mode '" + mode.name + "' selects no features");
  }
  const bool need_sif = mode.use_sif || mode.use_fm || mode.fusion != FusionMode::kConcat;
  const bool need_stf = mode.use_stf || mode.fusion != FusionMode::kConcat;

  FusionInputs inputs;
  inputs.query = query;
  if (need_sif) inputs.support = backbone.extract(support_image, ImageRole::kSupport);
  if (need_stf) {
    inputs.target = backbone.extract(mask_image(support_image, support_mask), ImageRole::kTarget);
  }

  switch (mode.fusion) {
    case FusionMode::kFeatureAdd:
    case FusionMode::kCorrelationAdd:
      return fuse(mode.fusion, inputs);
    case FusionMode::kAttention:
      // The blend happens inside the model, where the gate is trainable.
      return fuse(FusionMode::kConcat, inputs);
    case FusionMode::kConcat:
      break;
  }

  std::vector<CorrelationPyramid> parts;
  if (mode.use_sif) {
    parts.push_back(correlate_pyramids(inputs.support, query, CorrelationSource::kSupportImage));
  }
  if (mode.use_stf) {
    parts.push_back(correlate_pyramids(inputs.target, query, CorrelationSource::kSupportTarget));
  }
  if (mode.use_fm) {
    parts.push_back(correlate_pyramids(mask_features(inputs.support, support_mask), query,
                                       CorrelationSource::kFeatureMasked));
  }
  std::vector<const CorrelationPyramid*> refs;
  for (const auto& part : parts) refs.push_back(&part);
  return stack_channels(refs);
}

}  // namespace msi
