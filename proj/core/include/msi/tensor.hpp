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
#ifndef MSI_TENSOR_HPP_
#define MSI_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace msi {

// RGB raster, channel-major: value(c, y, x) lives at (c * height + y) * width
// + x. Values are expected in [0, 1].
struct Image {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0);

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool empty() const { return data.empty(); }

  bool operator==(const Image&) const = default;
};

// Binary raster in row-major order. Values are 0 or 1.
struct MaskBitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  MaskBitmap() = default;
  MaskBitmap(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t area() const { return data.size(); }
  std::size_t foreground() const;

  // Throws ShapeError on zero dims or size mismatch and DataError on any
  // value outside {0, 1}.
  void validate() const;

  bool operator==(const MaskBitmap&) const = default;
};

// One backbone level: channels x height x width, channel-major with
// row-major spatial layout.
struct FeatureTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureTensor() = default;
  FeatureTensor(int c, int h, int w, double fill = 0.0);

  int spatial() const { return height * width; }
  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  bool operator==(const FeatureTensor&) const = default;
};

// Dense row-major matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0);

  double& at(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  bool operator==(const Matrix&) const = default;
};

}  // namespace msi

#endif  // MSI_TENSOR_HPP_
