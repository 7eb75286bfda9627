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
#ifndef MSI_TRAIN_LOG_HPP_
#define MSI_TRAIN_LOG_HPP_

#include <filesystem>
#include <optional>
#include <vector>

namespace msi {

struct TrainRecord {
  int step = 0;
  double loss = 0.0;
  std::optional<double> val_miou;
  // Milliseconds since training started. The only non-reproducible column.
  double wallclock_ms = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;

  // CSV with header `step,loss,val_miou,wallclock_ms`; val_miou is empty on
  // steps without validation. `include_wallclock = false` drops the last
  // column, which makes two seeded runs byte-identical.
  void write_csv(const std::filesystem::path& path, bool include_wallclock = true) const;
  static TrainLog read_csv(const std::filesystem::path& path);
};

}  // namespace msi

#endif  // MSI_TRAIN_LOG_HPP_
