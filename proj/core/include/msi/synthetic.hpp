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
#ifndef MSI_SYNTHETIC_HPP_
#define MSI_SYNTHETIC_HPP_

#include <array>
#include <cstdint>
#include <string_view>

#include "msi/episode.hpp"

namespace msi {

enum class ShapeKind { kDisk, kSquare, kTriangle, kDiamond, kRing, kCross, kBar, kEllipse };

// Appearance of one synthetic class: a shape outline filled with a base color.
struct ShapeClass {
  ShapeKind kind;
  std::array<double, 3> color;
  std::string_view name;
};

// Fixed vocabulary; class id i uses kShapeVocabulary[i].
inline constexpr std::array<ShapeClass, 8> kShapeVocabulary{{
    {ShapeKind::kDisk, {0.85, 0.15, 0.15}, "red_disk"},
    {ShapeKind::kSquare, {0.15, 0.75, 0.20}, "green_square"},
    {ShapeKind::kTriangle, {0.20, 0.30, 0.90}, "blue_triangle"},
    {ShapeKind::kDiamond, {0.90, 0.85, 0.15}, "yellow_diamond"},
    {ShapeKind::kRing, {0.85, 0.20, 0.80}, "magenta_ring"},
    {ShapeKind::kCross, {0.15, 0.80, 0.85}, "cyan_cross"},
    {ShapeKind::kBar, {0.95, 0.55, 0.10}, "orange_bar"},
    {ShapeKind::kEllipse, {0.50, 0.20, 0.70}, "purple_ellipse"},
}};

struct SyntheticSpec {
  int width = 32;
  int height = 32;
  // Classes 0 .. num_classes-1 of kShapeVocabulary.
  int num_classes = 4;
  int min_distractors = 0;
  int max_distractors = 2;
  int min_targets = 1;
  int max_targets = 1;
  double min_radius = 4.0;
  double max_radius = 7.0;
  // Scales both the background texture and per-pixel noise. 0 gives flat
  // backgrounds and flat shape fills.
  double noise = 0.05;
  std::uint64_t seed = 0;

  // Throws ConfigError for canvases below 16x16 or inconsistent ranges.
  void validate() const;
};

// Renders one image containing at least one instance of `class_id`, drawn
// over any distractors, and its exact foreground mask. Pixel values are
// quantized to 8-bit levels so PNG persistence is lossless.
LabeledImage generate_synthetic_image(const SyntheticSpec& spec, int class_id,
                                      std::uint64_t seed);

// Support image j uses stream j of spec.seed; the query uses a dedicated
// stream, so episodes with different k share their query and leading
// supports.
Episode generate_synthetic_episode(const SyntheticSpec& spec, int class_id,
                                   int k);

}  // namespace msi

#endif  // MSI_SYNTHETIC_HPP_
