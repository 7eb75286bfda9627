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
#include "msi/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "msi/error.hpp"
#include "msi/rng.hpp"

namespace msi {
namespace {

constexpr std::uint64_t kQueryStream = 0x51554552;  // "QUER"

struct Placement {
  int class_id;
  double cx, cy, radius, angle, brightness;
};

bool inside_triangle(double u, double v, double r) {
  // Equilateral triangle with circumradius r, apex at v = -r.
  const double s3 = std::numbers::sqrt3;
  const double a0x = 0.0, a0y = -r;
  const double a1x = r * s3 / 2.0, a1y = r / 2.0;
  const double a2x = -r * s3 / 2.0, a2y = r / 2.0;
  auto edge = [&](double ax, double ay, double bx, double by) {
    return (bx - ax) * (v - ay) - (by - ay) * (u - ax);
  };
  const double e0 = edge(a0x, a0y, a1x, a1y);
  const double e1 = edge(a1x, a1y, a2x, a2y);
  const double e2 = edge(a2x, a2y, a0x, a0y);
  return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

bool covers(ShapeKind kind, const Placement& p, double px, double py) {
  const double dx = px - p.cx;
  const double dy = py - p.cy;
  const double c = std::cos(p.angle);
  const double s = std::sin(p.angle);
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  const double r = p.radius;
  const double au = std::abs(u);
  const double av = std::abs(v);
  switch (kind) {
    case ShapeKind::kDisk:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::kSquare:
      return au <= 0.85 * r && av <= 0.85 * r;
    case ShapeKind::kTriangle:
      return inside_triangle(u, v, 1.15 * r);
    case ShapeKind::kDiamond:
      return au + av <= 1.1 * r;
    case ShapeKind::kRing: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.3 * r * r;
    }
    case ShapeKind::kCross:
      return (au <= r / 3.0 && av <= r) || (av <= r / 3.0 && au <= r);
    case ShapeKind::kBar:
      return au <= 1.1 * r && av <= 0.45 * r;
    case ShapeKind::kEllipse:
      return (u * u) / (r * r) + (v * v) / (0.36 * r * r) <= 1.0;
  }
  return false;
}

double quantize(double v) {
  return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

Placement place(const SyntheticSpec& spec, int class_id, Rng& rng) {
  Placement p{};
  p.class_id = class_id;
  p.radius = rng.uniform(spec.min_radius, spec.max_radius);
  const double margin = std::min(p.radius, 0.5 * std::min(spec.width, spec.height) - 1.0);
  p.cx = rng.uniform(margin, spec.width - margin);
  p.cy = rng.uniform(margin, spec.height - margin);
  p.angle = rng.uniform(0.0, std::numbers::pi);
  p.brightness = rng.uniform(0.85, 1.0);
  return p;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (width < 16 || height < 16) {
    throw ConfigError("synthetic canvas must be at least 16x16, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  if (num_classes < 1 ||
      num_classes > static_cast<int>(kShapeVocabulary.size())) {
    throw ConfigError("synthetic num_classes must be in [1, " +
                      std::to_string(kShapeVocabulary.size()) + "]");
  }
  if (min_distractors < 0 || max_distractors < min_distractors) {
    throw ConfigError("invalid distractor count range");
  }
  if (min_targets < 1 || max_targets < min_targets) {
    throw ConfigError("invalid target count range (need >= 1)");
  }
  if (min_radius < 1.0 || max_radius < min_radius) {
    throw ConfigError("invalid shape radius range");
  }
  if (noise < 0.0) throw ConfigError("noise amplitude must be >= 0");
}

LabeledImage generate_synthetic_image(const SyntheticSpec& spec, int class_id,
                                      std::uint64_t seed) {
  spec.validate();
  if (class_id < 0 || class_id >= spec.num_classes) {
    throw ConfigError("class " + std::to_string(class_id) +
                      " is outside the synthetic vocabulary [0, " +
                      std::to_string(spec.num_classes) + ")");
  }
  Rng rng(seed);
  const int w = spec.width;
  const int h = spec.height;

  // Background: low-saturation gray with a sinusoidal texture.
  const double base = rng.uniform(0.35, 0.65);
  std::array<double, 3> tint{};
  for (auto& t : tint) t = rng.uniform(-0.05, 0.05);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double freq = rng.uniform(0.3, 0.9);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double texture = 2.0 * spec.noise;

  LabeledImage out;
  out.class_id = class_id;
  out.image = Image(w, h);
  std::vector<int> labels(static_cast<std::size_t>(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double wave =
          texture * std::sin(freq * (x * std::cos(theta) + y * std::sin(theta)) + phase);
      for (int c = 0; c < 3; ++c) out.image.at(c, y, x) = base + tint[c] + wave;
    }
  }

  std::vector<Placement> placements;
  const int distractors = rng.uniform_int(spec.min_distractors, spec.max_distractors);
  if (spec.num_classes > 1) {
    for (int i = 0; i < distractors; ++i) {
      int other = rng.uniform_int(0, spec.num_classes - 2);
      if (other >= class_id) ++other;
      placements.push_back(place(spec, other, rng));
    }
  }
  // Targets are drawn last so no distractor can hide them.
  const int targets = rng.uniform_int(spec.min_targets, spec.max_targets);
  for (int i = 0; i < targets; ++i) {
    placements.push_back(place(spec, class_id, rng));
  }

  for (const auto& p : placements) {
    const auto& cls = kShapeVocabulary[static_cast<std::size_t>(p.class_id)];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!covers(cls.kind, p, x + 0.5, y + 0.5)) continue;
        labels[static_cast<std::size_t>(y) * w + x] = p.class_id;
        for (int c = 0; c < 3; ++c) {
          out.image.at(c, y, x) = cls.color[static_cast<std::size_t>(c)] * p.brightness;
        }
      }
    }
  }

  for (auto& v : out.image.data) {
    v = quantize(v + (spec.noise > 0.0 ? rng.uniform(-spec.noise, spec.noise) : 0.0));
  }

  out.mask = MaskBitmap(w, h);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.mask.data[i] = labels[i] == class_id ? 1 : 0;
  }
  if (out.mask.foreground() == 0) {
    // Only reachable with radii too small to cover a pixel center.
    throw ConfigError("synthetic target covers no pixel; increase min_radius");
  }
  return out;
}

Episode generate_synthetic_episode(const SyntheticSpec& spec, int class_id,
                                   int k) {
  if (k < 1) throw ConfigError("shot count k must be >= 1");
  const std::uint64_t base = derive_seed(spec.seed, static_cast<std::uint64_t>(class_id));
  Episode episode;
  episode.class_id = class_id;
  for (int j = 0; j < k; ++j) {
    auto item = generate_synthetic_image(spec, class_id,
                                         derive_seed(base, static_cast<std::uint64_t>(j)));
    episode.support_images.push_back(std::move(item.image));
    episode.support_masks.push_back(std::move(item.mask));
  }
  auto query = generate_synthetic_image(spec, class_id, derive_seed(base, kQueryStream));
  episode.query_image = std::move(query.image);
  episode.query_mask = std::move(query.mask);
  return episode;
}

}  // namespace msi
