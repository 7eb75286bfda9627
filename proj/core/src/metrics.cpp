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
#include "msi/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "msi/error.hpp"

namespace msi {

Confusion confusion(const MaskBitmap& pred, const MaskBitmap& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ShapeError("prediction is " + std::to_string(pred.width) + "x" +
                     std::to_string(pred.height) + " but ground truth is " +
                     std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool g = gt.data[i] != 0;
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double iou_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  const std::int64_t denom = tp + fp + fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(tp) / static_cast<double>(denom);
}

double iou(const MaskBitmap& pred, const MaskBitmap& gt) {
  const auto c = confusion(pred, gt);
  return iou_from_counts(c.tp, c.fp, c.fn);
}

EpisodeResult score_episode(int class_id, const MaskBitmap& pred, const MaskBitmap& gt,
                            double support_area_fraction) {
  EpisodeResult r;
  r.class_id = class_id;
  r.counts = confusion(pred, gt);
  r.iou = iou_from_counts(r.counts.tp, r.counts.fp, r.counts.fn);
  r.support_area_fraction = support_area_fraction;
  return r;
}

MiouMode parse_miou_mode(const std::string& name) {
  if (name == "paper") return MiouMode::kPaper;
  if (name == "per_class") return MiouMode::kPerClass;
  throw ConfigError("unknown mIoU mode '" + name + "'; valid: paper, per_class");
}

const char* to_string(MiouMode mode) {
  return mode == MiouMode::kPaper ? "paper" : "per_class";
}

std::map<int, double> per_class_miou(std::span<const EpisodeResult> results) {
  std::map<int, std::pair<double, std::size_t>> sums;
  for (const auto& r : results) {
    auto& [sum, count] = sums[r.class_id];
    sum += r.iou;
    ++count;
  }
  std::map<int, double> means;
  for (const auto& [cls, acc] : sums) means[cls] = acc.first / static_cast<double>(acc.second);
  return means;
}

double miou(std::span<const EpisodeResult> results, MiouMode mode) {
  if (results.empty()) throw ConfigError("mIoU of an empty result set");
  if (mode == MiouMode::kPerClass) {
    const auto means = per_class_miou(results);
    double sum = 0.0;
    for (const auto& [cls, mean] : means) sum += mean;
    return sum / static_cast<double>(means.size());
  }
  double sum = 0.0;
  for (const auto& r : results) sum += r.iou;
  return sum / static_cast<double>(results.size());
}

double fb_iou(std::span<const EpisodeResult> results) {
  if (results.empty()) throw ConfigError("FB-IoU of an empty result set");
  Confusion pooled;
  for (const auto& r : results) {
    pooled.tp += r.counts.tp;
    pooled.fp += r.counts.fp;
    pooled.fn += r.counts.fn;
    pooled.tn += r.counts.tn;
  }
  const double fg = iou_from_counts(pooled.tp, pooled.fp, pooled.fn);
  // Background roles: TN are hits, FN are background false positives.
  const double bg = iou_from_counts(pooled.tn, pooled.fn, pooled.fp);
  return 0.5 * (fg + bg);
}

StratifiedReport stratified_small_mask(std::span<const EpisodeResult> results, double threshold,
                                       MiouMode mode) {
  std::vector<EpisodeResult> subset;
  for (const auto& r : results) {
    if (r.support_area_fraction < threshold) subset.push_back(r);
  }
  StratifiedReport report;
  report.threshold = threshold;
  report.n = subset.size();
  if (!subset.empty()) report.miou = miou(subset, mode);
  return report;
}

std::optional<ThresholdCrossing> time_to_threshold(const TrainLog& log, double target) {
  for (const auto& record : log.records) {
    if (record.val_miou && *record.val_miou >= target) {
      return ThresholdCrossing{record.step, record.wallclock_ms};
    }
  }
  return std::nullopt;
}

std::optional<double> speedup_ratio(const ThresholdCrossing& baseline,
                                    const ThresholdCrossing& method, ConvergenceClock clock) {
  const double base = clock == ConvergenceClock::kWallclock ? baseline.wallclock_ms
                                                            : static_cast<double>(baseline.step);
  const double mine = clock == ConvergenceClock::kWallclock ? method.wallclock_ms
                                                            : static_cast<double>(method.step);
  if (!(mine > 0.0)) return std::nullopt;
  return base / mine;
}

std::optional<double> speedup_ratio(const TrainLog& baseline, const TrainLog& method,
                                    double target, ConvergenceClock clock) {
  const auto b = time_to_threshold(baseline, target);
  const auto m = time_to_threshold(method, target);
  if (!b || !m) return std::nullopt;
  return speedup_ratio(*b, *m, clock);
}

void TrainLog::write_csv(const std::filesystem::path& path, bool include_wallclock) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << (include_wallclock ? "step,loss,val_miou,wallclock_ms\n" : "step,loss,val_miou\n");
  char buf[64];
  for (const auto& r : records) {
    out << r.step << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.loss);
    out << buf << ',';
    if (r.val_miou) {
      std::snprintf(buf, sizeof(buf), "%.17g", *r.val_miou);
      out << buf;
    }
    if (include_wallclock) {
      std::snprintf(buf, sizeof(buf), "%.3f", r.wallclock_ms);
      out << ',' << buf;
    }
    out << '\n';
  }
}

TrainLog TrainLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  std::string line;
  std::getline(in, line);
  const bool has_wallclock = line.find("wallclock_ms") != std::string::npos;
  TrainLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string step, loss, val, wall;
    std::getline(row, step, ',');
    std::getline(row, loss, ',');
    std::getline(row, val, ',');
    if (has_wallclock) std::getline(row, wall, ',');
    try {
      TrainRecord r;
      r.step = std::stoi(step);
      r.loss = std::stod(loss);
      if (!val.empty()) r.val_miou = std::stod(val);
      if (!wall.empty()) r.wallclock_ms = std::stod(wall);
      log.records.push_back(r);
    } catch (const std::exception&) {
      throw DataError("malformed train log row in " + path.string() + ": " + line);
    }
  }
  return log;
}

}  // namespace msi
