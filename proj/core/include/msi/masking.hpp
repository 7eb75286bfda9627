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
#ifndef MSI_MASKING_HPP_
#define MSI_MASKING_HPP_

#include "msi/backbone.hpp"
#include "msi/tensor.hpp"

namespace msi {

// Nearest-neighbour resample: target (x, y) reads source
// (x * src_w / dst_w, y * src_h / dst_h). Throws ShapeError on a zero target
// dimension.
MaskBitmap resize_mask(const MaskBitmap& mask, int width, int height);

// Input-level masking: the image multiplied by the mask resized to the image
// dims, the same mask for every channel.
Image mask_image(const Image& image, const MaskBitmap& mask);

// Feature-level masking baseline: every channel of level i multiplied by the
// mask resized to that level's dims.
FeaturePyramid mask_features(const FeaturePyramid& pyramid, const MaskBitmap& mask);

// Foreground pixels over total pixels.
double mask_area_fraction(const MaskBitmap& mask);

}  // namespace msi

#endif  // MSI_MASKING_HPP_
