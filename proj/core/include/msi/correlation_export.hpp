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
#ifndef MSI_CORRELATION_EXPORT_HPP_
#define MSI_CORRELATION_EXPORT_HPP_

#include <filesystem>
#include <vector>

#include "msi/correlation.hpp"

namespace msi {

inline constexpr char kCorrelationMagic[8] = {'M', 'S', 'I', 'C', 'O', 'R', 'R', '1'};

// Raw dump, all integers uint32 little-endian:
//   magic "MSICORR1" (8 bytes), N levels, C channels,
//   then per level: support_height, support_width, query_height, query_width,
//   then per level the C * P * Q values as float32 little-endian in
//   (channel, support-y, support-x, query-y, query-x) order.
void write_correlation_binary(const std::filesystem::path& path, const SuperCorrelationMaps& maps);
// Values come back rounded to float32; channel sources are not stored.
SuperCorrelationMaps read_correlation_binary(const std::filesystem::path& path);

// One grayscale PNG per (level, channel): a support_height x support_width
// grid of query_height x query_width tiles, tile (sy, sx) showing the
// correlation of support position (sy, sx) with every query position.
// Values map to round(255 * clamp(v, 0, 1)). Returns the written paths,
// named level<i>_ch<c>.png.
std::vector<std::filesystem::path> write_correlation_pngs(const std::filesystem::path& dir,
                                                          const SuperCorrelationMaps& maps);

}  // namespace msi

#endif  // MSI_CORRELATION_EXPORT_HPP_
