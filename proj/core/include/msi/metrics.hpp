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
#ifndef MSI_METRICS_HPP_
#define MSI_METRICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "msi/tensor.hpp"
#include "msi/train_log.hpp"

namespace msi {

// Confusion counts for one prediction against its ground truth.
struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

// Throws ShapeError if the masks differ in size.
Confusion confusion(const MaskBitmap& pred, const MaskBitmap& gt);

// TP / (TP + FP + FN), with 0/0 (both masks empty) defined as 1.
double iou_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);
double iou(const MaskBitmap& pred, const MaskBitmap& gt);

struct EpisodeResult {
  int class_id = 0;
  double iou = 0.0;
  Confusion counts;
  // Foreground fraction of the (first) support mask.
  double support_area_fraction = 0.0;
};

EpisodeResult score_episode(int class_id, const MaskBitmap& pred, const MaskBitmap& gt,
                            double support_area_fraction);

enum class MiouMode {
  kPaper,     // mean over episodes
  kPerClass,  // mean over per-class means
};

MiouMode parse_miou_mode(const std::string& name);
const char* to_string(MiouMode mode);

// Throws ConfigError on empty input.
double miou(std::span<const EpisodeResult> results, MiouMode mode = MiouMode::kPaper);

// Pixel counts pooled over all episodes, then 0.5 * (IoU_fg + IoU_bg).
// Throws ConfigError on empty input.
double fb_iou(std::span<const EpisodeResult> results);

std::map<int, double> per_class_miou(std::span<const EpisodeResult> results);

struct StratifiedReport {
  double threshold = 0.0;
  std::size_t n = 0;
  std::optional<double> miou;  // absent when n == 0
};

// Episodes whose support mask covers strictly less than `threshold` of the
// image.
StratifiedReport stratified_small_mask(std::span<const EpisodeResult> results,
                                       double threshold = 0.05, MiouMode mode = MiouMode::kPaper);

struct ThresholdCrossing {
  int step = 0;
  double wallclock_ms = 0.0;
};

// First logged validation whose mIoU >= target.
std::optional<ThresholdCrossing> time_to_threshold(const TrainLog& log, double target = 0.60);

// How many times faster `method` reaches the target than `baseline`, in
// wallclock or in steps. Absent if either never reaches it.
enum class ConvergenceClock { kWallclock, kSteps };
std::optional<double> speedup_ratio(const ThresholdCrossing& baseline,
                                    const ThresholdCrossing& method,
                                    ConvergenceClock clock = ConvergenceClock::kWallclock);
std::optional<double> speedup_ratio(const TrainLog& baseline, const TrainLog& method,
                                    double target = 0.60,
                                    ConvergenceClock clock = ConvergenceClock::kWallclock);

}  // namespace msi

#endif  // MSI_METRICS_HPP_
