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
#include "msi/report.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "msi/error.hpp"

namespace msi {
namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

nlohmann::json stratum_json(const StratifiedReport& s) {
  nlohmann::json j;
  j["threshold"] = s.threshold;
  j["n"] = s.n;
  j["miou"] = s.miou ? nlohmann::json(*s.miou) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

double MetricsReport::mean_miou() const {
  if (folds.empty()) throw ConfigError("report has no folds");
  double sum = 0.0;
  for (const auto& f : folds) sum += f.miou;
  return sum / static_cast<double>(folds.size());
}

double MetricsReport::mean_fb_iou() const {
  if (folds.empty()) throw ConfigError("report has no folds");
  double sum = 0.0;
  for (const auto& f : folds) sum += f.fb_iou;
  return sum / static_cast<double>(folds.size());
}

std::size_t MetricsReport::total_n() const {
  std::size_t n = 0;
  for (const auto& f : folds) n += f.n;
  return n;
}

StratifiedReport MetricsReport::small_mask(double threshold) const {
  std::vector<EpisodeResult> all;
  for (const auto& f : folds) all.insert(all.end(), f.episodes.begin(), f.episodes.end());
  return stratified_small_mask(all, threshold, mode);
}

FoldMetrics summarize_fold(int fold, std::span<const EpisodeResult> results, MiouMode mode,
                           double small_mask_threshold) {
  FoldMetrics f;
  f.fold = fold;
  f.n = results.size();
  f.miou = miou(results, mode);
  f.fb_iou = fb_iou(results);
  f.per_class = per_class_miou(results);
  f.small_mask = stratified_small_mask(results, small_mask_threshold, mode);
  f.episodes.assign(results.begin(), results.end());
  return f;
}

std::string report_to_json(const MetricsReport& report, double small_mask_threshold) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["label"] = report.label;
  j["miou_mode"] = to_string(report.mode);
  j["num_folds"] = report.num_folds;
  j["shots"] = report.shots;
  j["n"] = report.total_n();
  j["miou"] = report.mean_miou();
  j["fb_iou"] = report.mean_fb_iou();
  j["small_mask"] = stratum_json(report.small_mask(small_mask_threshold));
  j["folds"] = nlohmann::json::array();
  for (const auto& f : report.folds) {
    nlohmann::json fj;
    fj["fold"] = f.fold;
    fj["n"] = f.n;
    fj["miou"] = f.miou;
    fj["fb_iou"] = f.fb_iou;
    fj["small_mask"] = stratum_json(f.small_mask);
    fj["per_class"] = nlohmann::json::object();
    for (const auto& [cls, value] : f.per_class) fj["per_class"][std::to_string(cls)] = value;
    fj["episodes"] = nlohmann::json::array();
    for (const auto& e : f.episodes) {
      fj["episodes"].push_back({{"class_id", e.class_id},
                                {"iou", e.iou},
                                {"tp", e.counts.tp},
                                {"fp", e.counts.fp},
                                {"fn", e.counts.fn},
                                {"tn", e.counts.tn},
                                {"support_area_fraction", e.support_area_fraction}});
    }
    j["folds"].push_back(std::move(fj));
  }
  if (report.convergence) {
    nlohmann::json cj;
    cj["target"] = report.convergence->target;
    if (report.convergence->crossing) {
      cj["step"] = report.convergence->crossing->step;
      cj["wallclock_ms"] = report.convergence->crossing->wallclock_ms;
    } else {
      cj["step"] = nullptr;
      cj["wallclock_ms"] = nullptr;
    }
    j["convergence"] = std::move(cj);
  }
  return j.dump(2) + "\n";
}

std::string report_csv_header(int num_folds) {
  std::string h = "label";
  for (int i = 0; i < num_folds; ++i) h += ",fold" + std::to_string(i);
  h += ",miou,fb_iou,small_miou,small_n,n";
  return h;
}

std::string report_csv_row(const MetricsReport& report, double small_mask_threshold) {
  std::string row = report.label;
  for (int i = 0; i < report.num_folds; ++i) {
    row += ",";
    for (const auto& f : report.folds) {
      if (f.fold == i) {
        row += format_number(f.miou);
        break;
      }
    }
  }
  const auto small = report.small_mask(small_mask_threshold);
  row += "," + format_number(report.mean_miou()) + "," + format_number(report.mean_fb_iou());
  row += "," + (small.miou ? format_number(*small.miou) : std::string());
  row += "," + std::to_string(small.n) + "," + std::to_string(report.total_n());
  return row;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw DataError("failed writing " + path.string());
}

void write_report_files(const std::filesystem::path& json_path,
                        const std::filesystem::path& csv_path, const MetricsReport& report,
                        double small_mask_threshold) {
  write_text_file(json_path, report_to_json(report, small_mask_threshold));
  write_text_file(csv_path, report_csv_header(report.num_folds) + "\n" +
                                report_csv_row(report, small_mask_threshold) + "\n");
}

}  // namespace msi
