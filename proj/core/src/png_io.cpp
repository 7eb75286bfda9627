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
#include "msi/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "msi/error.hpp"

namespace msi {
namespace {

std::vector<std::uint8_t> read_with_format(const std::filesystem::path& path,
                                           png_uint_32 format, int& width,
                                           int& height) {
  if (!std::filesystem::exists(path)) {
    throw DataError("missing file: " + path.string());
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " +
                    image.message);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return buffer;
}

void write_with_format(const std::filesystem::path& path, png_uint_32 format,
                       int width, int height, const std::uint8_t* pixels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels, 0,
                               nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " +
                    image.message);
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image read_png_rgb(const std::filesystem::path& path) {
  int w = 0;
  int h = 0;
  const auto buffer = read_with_format(path, PNG_FORMAT_RGB, w, h);
  Image image(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        image.at(c, y, x) =
            buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
      }
    }
  }
  return image;
}

void write_png_rgb(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(image.width) *
                                   image.height * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        buffer[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] =
            to_byte(image.at(c, y, x));
      }
    }
  }
  write_with_format(path, PNG_FORMAT_RGB, image.width, image.height,
                    buffer.data());
}

GrayRaster read_png_gray(const std::filesystem::path& path) {
  GrayRaster raster;
  raster.data = read_with_format(path, PNG_FORMAT_GRAY, raster.width,
                                 raster.height);
  return raster;
}

void write_png_gray(const std::filesystem::path& path,
                    const GrayRaster& raster) {
  if (raster.data.size() !=
      static_cast<std::size_t>(raster.width) * raster.height) {
    throw ShapeError("gray raster buffer does not match " +
                     std::to_string(raster.width) + "x" +
                     std::to_string(raster.height));
  }
  write_with_format(path, PNG_FORMAT_GRAY, raster.width, raster.height,
                    raster.data.data());
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& interleaved) {
  if (interleaved.size() != static_cast<std::size_t>(width) * height * 3) {
    throw ShapeError("RGB buffer does not match its dimensions");
  }
  write_with_format(path, PNG_FORMAT_RGB, width, height, interleaved.data());
}

}  // namespace msi
