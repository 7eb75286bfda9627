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
#include "msi/tensor.hpp"

#include <algorithm>
#include <string>

#include "msi/error.hpp"

namespace msi {

Image::Image(int w, int h, double fill)
    : width(w),
      height(h),
      data(static_cast<std::size_t>(kChannels) * w * h, fill) {}

MaskBitmap::MaskBitmap(int w, int h, std::uint8_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

std::size_t MaskBitmap::foreground() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1));
}

void MaskBitmap::validate() const {
  if (width <= 0 || height <= 0) {
    throw ShapeError("mask has zero dimension (" + std::to_string(width) +
                     "x" + std::to_string(height) + ")");
  }
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("mask buffer size does not match its dimensions");
  }
  for (const auto v : data) {
    if (v > 1) {
      throw DataError("mask is not binary: found value " + std::to_string(v));
    }
  }
}

FeatureTensor::FeatureTensor(int c, int h, int w, double fill)
    : channels(c),
      height(h),
      width(w),
      data(static_cast<std::size_t>(c) * h * w, fill) {}

Matrix::Matrix(int r, int c, double fill)
    : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

}  // namespace msi
