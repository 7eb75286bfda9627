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
#ifndef MSI_REPORT_HPP_
#define MSI_REPORT_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msi/metrics.hpp"

namespace msi {

inline constexpr int kReportSchemaVersion = 1;

struct FoldMetrics {
  int fold = 0;
  std::size_t n = 0;
  double miou = 0.0;
  double fb_iou = 0.0;
  std::map<int, double> per_class;
  StratifiedReport small_mask;
  std::vector<EpisodeResult> episodes;
};

struct ConvergenceReport {
  double target = 0.60;
  std::optional<ThresholdCrossing> crossing;
};

struct MetricsReport {
  std::string label;
  MiouMode mode = MiouMode::kPaper;
  int num_folds = 1;
  int shots = 1;
  std::vector<FoldMetrics> folds;
  std::optional<ConvergenceReport> convergence;

  // Mean over evaluated folds. Throws ConfigError when no fold is present.
  double mean_miou() const;
  double mean_fb_iou() const;
  std::size_t total_n() const;
  // Small-mask stratum pooled over every fold's episodes.
  StratifiedReport small_mask(double threshold) const;
};

// Throws ConfigError on empty results.
FoldMetrics summarize_fold(int fold, std::span<const EpisodeResult> results, MiouMode mode,
                           double small_mask_threshold = 0.05);

// JSON with sorted keys. The schema is documented in the README.
std::string report_to_json(const MetricsReport& report, double small_mask_threshold = 0.05);

// Header: label,fold0..fold{F-1},miou,fb_iou,small_miou,small_n,n. Folds
// without results are left empty.
std::string report_csv_header(int num_folds);
std::string report_csv_row(const MetricsReport& report, double small_mask_threshold = 0.05);

void write_report_files(const std::filesystem::path& json_path,
                        const std::filesystem::path& csv_path, const MetricsReport& report,
                        double small_mask_threshold = 0.05);

// Writes `contents` to `path`, throwing DataError with the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace msi

#endif  // MSI_REPORT_HPP_
