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
#ifndef MSI_CLI_PLOT_HPP_
#define MSI_CLI_PLOT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msi/train_log.hpp"

namespace msi::cli {

using Rgb = std::array<std::uint8_t, 3>;

struct Series {
  std::string name;
  Rgb color{0, 0, 0};
  std::vector<std::pair<double, double>> points;
};

// One panel: axes box, light grid, optional dashed reference line and one
// polyline per series. No text is rendered.
struct Panel {
  std::vector<Series> series;
  std::optional<double> y_min;
  std::optional<double> y_max;
  std::optional<double> reference_y;
};

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved
};

Raster render_panel(const Panel& panel, int width, int height);
// Panels placed left to right.
Raster render_panels(const std::vector<Panel>& panels, int panel_width, int panel_height);
void write_plot(const std::filesystem::path& path, const std::vector<Panel>& panels,
                int panel_width = 480, int panel_height = 320);

Series loss_series(const TrainLog& log, std::string name, Rgb color);
Series val_series(const TrainLog& log, std::string name, Rgb color);

inline constexpr Rgb kBlue{31, 119, 180};
inline constexpr Rgb kOrange{255, 127, 14};
inline constexpr Rgb kGreen{44, 160, 44};

}  // namespace msi::cli

#endif  // MSI_CLI_PLOT_HPP_
