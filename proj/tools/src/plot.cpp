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
#include "msi_cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msi/png_io.hpp"

namespace msi::cli {
namespace {

constexpr int kMargin = 24;
constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kReference{150, 150, 150};

void put(Raster& r, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= r.width || y >= r.height) return;
  const auto i = 3 * (static_cast<std::size_t>(y) * r.width + x);
  r.rgb[i] = c[0];
  r.rgb[i + 1] = c[1];
  r.rgb[i + 2] = c[2];
}

void line(Raster& r, int x0, int y0, int x1, int y1, Rgb c, int thickness = 1, int dash = 0) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  int n = 0;
  while (true) {
    if (dash == 0 || (n / dash) % 2 == 0) {
      for (int t = 0; t < thickness; ++t) {
        put(r, x0, y0 + t, c);
        put(r, x0 + t, y0, c);
      }
    }
    ++n;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Raster render_panel(const Panel& panel, int width, int height) {
  Raster r{width, height, std::vector<std::uint8_t>(3 * static_cast<std::size_t>(width) * height, 255)};
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  for (const auto& s : panel.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0.0;
    x_hi = 1.0;
    y_lo = 0.0;
    y_hi = 1.0;
  }
  if (panel.y_min) y_lo = *panel.y_min;
  if (panel.y_max) y_hi = *panel.y_max;
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;

  const int left = kMargin;
  const int right = width - kMargin;
  const int top = kMargin;
  const int bottom = height - kMargin;
  auto px = [&](double x) {
    return left + static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * (right - left)));
  };
  auto py = [&](double y) {
    return bottom - static_cast<int>(std::lround((y - y_lo) / (y_hi - y_lo) * (bottom - top)));
  };

  for (int i = 1; i < 4; ++i) {
    const int gy = top + i * (bottom - top) / 4;
    const int gx = left + i * (right - left) / 4;
    line(r, left, gy, right, gy, kGrid);
    line(r, gx, top, gx, bottom, kGrid);
  }
  if (panel.reference_y) {
    const int y = py(*panel.reference_y);
    line(r, left, y, right, y, kReference, 1, 6);
  }
  line(r, left, top, right, top, kAxis);
  line(r, left, bottom, right, bottom, kAxis);
  line(r, left, top, left, bottom, kAxis);
  line(r, right, top, right, bottom, kAxis);

  for (const auto& s : panel.series) {
    const std::pair<double, double>* prev = nullptr;
    for (const auto& p : s.points) {
      if (!std::isfinite(p.first) || !std::isfinite(p.second)) continue;
      if (prev != nullptr) {
        line(r, px(prev->first), py(prev->second), px(p.first), py(p.second), s.color, 2);
      } else {
        put(r, px(p.first), py(p.second), s.color);
      }
      prev = &p;
    }
  }
  return r;
}

Raster render_panels(const std::vector<Panel>& panels, int panel_width, int panel_height) {
  const int count = std::max<int>(1, static_cast<int>(panels.size()));
  Raster out{panel_width * count, panel_height,
             std::vector<std::uint8_t>(3 * static_cast<std::size_t>(panel_width) * count *
                                           panel_height,
                                       255)};
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const Raster one = render_panel(panels[i], panel_width, panel_height);
    for (int y = 0; y < panel_height; ++y) {
      std::copy_n(one.rgb.begin() + 3 * static_cast<std::ptrdiff_t>(y) * panel_width,
                  3 * panel_width,
                  out.rgb.begin() + 3 * (static_cast<std::ptrdiff_t>(y) * out.width +
                                         static_cast<std::ptrdiff_t>(i) * panel_width));
    }
  }
  return out;
}

void write_plot(const std::filesystem::path& path, const std::vector<Panel>& panels,
                int panel_width, int panel_height) {
  const Raster r = render_panels(panels, panel_width, panel_height);
  write_png_rgb8(path, r.width, r.height, r.rgb);
}

Series loss_series(const TrainLog& log, std::string name, Rgb color) {
  Series s{std::move(name), color, {}};
  for (const auto& rec : log.records) s.points.emplace_back(rec.step, rec.loss);
  return s;
}

Series val_series(const TrainLog& log, std::string name, Rgb color) {
  Series s{std::move(name), color, {}};
  for (const auto& rec : log.records) {
    if (rec.val_miou) s.points.emplace_back(rec.step, *rec.val_miou);
  }
  return s;
}

}  // namespace msi::cli
