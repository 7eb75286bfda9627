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
#ifndef MSI_TESTS_SUPPORT_TEST_UTIL_HPP_
#define MSI_TESTS_SUPPORT_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "msi/correlation.hpp"
#include "msi/rng.hpp"
#include "msi/segmenter.hpp"
#include "msi/tensor.hpp"

namespace msi::testing {

inline FeatureTensor random_features(int c, int h, int w, Rng& rng) {
  FeatureTensor t(c, h, w);
  for (auto& v : t.data) v = rng.normal();
  return t;
}

inline MaskBitmap random_mask(int w, int h, double p, Rng& rng) {
  MaskBitmap m(w, h);
  for (auto& v : m.data) v = rng.uniform() < p ? 1 : 0;
  return m;
}

inline Image random_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

// Random SCM-like input with values in [0, 1]: `levels` levels whose side
// halves from `side`, `channels` channels each.
inline SuperCorrelationMaps random_scm(int levels, int side, int channels, Rng& rng) {
  SuperCorrelationMaps scm;
  for (int c = 0; c < channels; ++c) scm.channel_sources.push_back(CorrelationSource::kSupportImage);
  for (int l = 0; l < levels; ++l) {
    const int s = std::max(side >> l, 1);
    CorrelationTensor t(channels, s, s, s, s);
    for (auto& v : t.data) v = rng.uniform();
    scm.levels.push_back(std::move(t));
  }
  return scm;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("msi_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) return {};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

}  // namespace msi::testing

#endif  // MSI_TESTS_SUPPORT_TEST_UTIL_HPP_
