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
#include "msi/correlation_export.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "msi/error.hpp"
#include "msi/png_io.hpp"

namespace msi {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw DataError("truncated correlation dump: " + path.string());
  }
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

void write_correlation_binary(const std::filesystem::path& path, const SuperCorrelationMaps& maps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write correlation dump: " + path.string());
  out.write(kCorrelationMagic, sizeof(kCorrelationMagic));
  put_u32(out, static_cast<std::uint32_t>(maps.levels.size()));
  put_u32(out, static_cast<std::uint32_t>(maps.channels()));
  for (const auto& level : maps.levels) {
    put_u32(out, static_cast<std::uint32_t>(level.support_height));
    put_u32(out, static_cast<std::uint32_t>(level.support_width));
    put_u32(out, static_cast<std::uint32_t>(level.query_height));
    put_u32(out, static_cast<std::uint32_t>(level.query_width));
  }
  for (const auto& level : maps.levels) {
    for (const double v : level.data) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) throw DataError("error while writing " + path.string());
}

SuperCorrelationMaps read_correlation_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCorrelationMagic, 8) != 0) {
    throw DataError(path.string() + " is not a correlation dump (bad magic)");
  }
  const auto levels = get_u32(in, path);
  const auto channels = get_u32(in, path);
  SuperCorrelationMaps maps;
  for (std::uint32_t i = 0; i < levels; ++i) {
    const int sh = static_cast<int>(get_u32(in, path));
    const int sw = static_cast<int>(get_u32(in, path));
    const int qh = static_cast<int>(get_u32(in, path));
    const int qw = static_cast<int>(get_u32(in, path));
    maps.levels.emplace_back(static_cast<int>(channels), sh, sw, qh, qw);
  }
  for (auto& level : maps.levels) {
    for (auto& v : level.data) v = std::bit_cast<float>(get_u32(in, path));
  }
  maps.channel_sources.assign(channels, CorrelationSource::kSupportImage);
  return maps;
}

std::vector<std::filesystem::path> write_correlation_pngs(const std::filesystem::path& dir,
                                                          const SuperCorrelationMaps& maps) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < maps.levels.size(); ++i) {
    const auto& level = maps.levels[i];
    const int tiles_w = level.support_width;
    const int tile_w = level.query_width;
    const int tile_h = level.query_height;
    for (int c = 0; c < level.channels; ++c) {
      GrayRaster raster{tiles_w * tile_w, level.support_height * tile_h, {}};
      raster.data.resize(static_cast<std::size_t>(raster.width) * raster.height);
      for (int sy = 0; sy < level.support_height; ++sy) {
        for (int sx = 0; sx < level.support_width; ++sx) {
          const int p = sy * level.support_width + sx;
          for (int qy = 0; qy < tile_h; ++qy) {
            for (int qx = 0; qx < tile_w; ++qx) {
              const double v = std::clamp(level.at(c, p, qy * tile_w + qx), 0.0, 1.0);
              const std::size_t row = static_cast<std::size_t>(sy) * tile_h + qy;
              const std::size_t col = static_cast<std::size_t>(sx) * tile_w + qx;
              raster.data[row * raster.width + col] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
          }
        }
      }
      const auto path = dir / ("level" + std::to_string(i) + "_ch" + std::to_string(c) + ".png");
      write_png_gray(path, raster);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace msi
