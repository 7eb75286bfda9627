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
#include "msi/masking.hpp"

#include <string>

#include "msi/error.hpp"

namespace msi {

MaskBitmap resize_mask(const MaskBitmap& mask, int width, int height) {
  mask.validate();
  if (width < 1 || height < 1) {
    throw ShapeError("cannot resize a mask to " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
  if (width == mask.width && height == mask.height) return mask;
  MaskBitmap out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(static_cast<long long>(y) * mask.height / height);
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>(static_cast<long long>(x) * mask.width / width);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Image mask_image(const Image& image, const MaskBitmap& mask) {
  const MaskBitmap resized = resize_mask(mask, image.width, image.height);
  Image out = image;
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        out.at(c, y, x) *= static_cast<double>(resized.at(y, x));
      }
    }
  }
  return out;
}

FeaturePyramid mask_features(const FeaturePyramid& pyramid, const MaskBitmap& mask) {
  FeaturePyramid out = pyramid;
  for (auto& level : out.levels) {
    const MaskBitmap resized = resize_mask(mask, level.width, level.height);
    for (int c = 0; c < level.channels; ++c) {
      for (int y = 0; y < level.height; ++y) {
        for (int x = 0; x < level.width; ++x) {
          level.at(c, y, x) *= static_cast<double>(resized.at(y, x));
        }
      }
    }
  }
  return out;
}

double mask_area_fraction(const MaskBitmap& mask) {
  if (mask.area() == 0) return 0.0;
  return static_cast<double>(mask.foreground()) / static_cast<double>(mask.area());
}

}  // namespace msi
