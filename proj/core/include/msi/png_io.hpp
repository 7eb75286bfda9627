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
#ifndef MSI_PNG_IO_HPP_
#define MSI_PNG_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "msi/tensor.hpp"

namespace msi {

struct GrayRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

// 8-bit RGB read; values are mapped to k / 255.
Image read_png_rgb(const std::filesystem::path& path);
// Values are clamped to [0, 1] and rounded to the nearest 8-bit level.
void write_png_rgb(const std::filesystem::path& path, const Image& image);

GrayRaster read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const GrayRaster& raster);

// RGB raster stored interleaved (r, g, b per pixel), used by the plotting code.
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& interleaved);

}  // namespace msi

#endif  // MSI_PNG_IO_HPP_
