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
#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "msi/episode.hpp"
#include "msi/error.hpp"
#include "msi/rng.hpp"
#include "support/test_util.hpp"

namespace msi {
namespace {

std::vector<int> range(int lo, int hi) {
  std::vector<int> v(static_cast<std::size_t>(hi - lo));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

// Independent block enumeration: position i is a test position of fold f
// iff floor(i / block) == f.
std::vector<int> expected_test(int num_classes, int num_folds, int fold,
                               const std::vector<int>* perm) {
  std::vector<int> out;
  const int block = num_classes / num_folds;
  for (int i = 0; i < num_classes; ++i) {
    if (i / block == fold) out.push_back(perm != nullptr ? (*perm)[i] : i);
  }
  return out;
}

TEST(SplitFolds, TwentyClassesFoldZero) {
  const auto split = split_folds({20, 4, 0, std::nullopt});
  EXPECT_EQ(split.test_classes, range(0, 5));
  EXPECT_EQ(split.train_classes, range(5, 20));
}

TEST(SplitFolds, EveryFoldPartitionsTwentyClasses) {
  for (int f = 0; f < 4; ++f) {
    const auto split = split_folds({20, 4, f, std::nullopt});
    EXPECT_EQ(split.test_classes.size(), 5u);
    EXPECT_EQ(split.train_classes.size(), 15u);
    std::set<int> all(split.test_classes.begin(), split.test_classes.end());
    for (const int c : split.train_classes) EXPECT_TRUE(all.insert(c).second);
    EXPECT_EQ(all.size(), 20u);
  }
}

TEST(SplitFolds, HundredClassesFoldTwo) {
  // 20 test classes per fold over 100 classes.
  const auto split = split_folds({100, 4, 2, std::nullopt, 20});
  EXPECT_EQ(split.test_classes, range(40, 60));
  EXPECT_EQ(split.train_classes.size(), 80u);
  // Without the override the four folds tile the class list.
  const auto tiled = split_folds({100, 4, 2, std::nullopt});
  EXPECT_EQ(tiled.test_classes, expected_test(100, 4, 2, nullptr));
  EXPECT_EQ(tiled.test_classes, range(50, 75));
}

TEST(SplitFolds, TestBlockMustFit) {
  EXPECT_THROW(split_folds({100, 4, 0, std::nullopt, 26}), ConfigError);
  EXPECT_THROW(split_folds({100, 4, 0, std::nullopt, 0}), ConfigError);
  EXPECT_NO_THROW(split_folds({100, 4, 3, std::nullopt, 25}));
}

TEST(SplitFolds, IndivisibleCountIsConfigError) {
  EXPECT_THROW(split_folds({10, 4, 0, std::nullopt}), ConfigError);
  EXPECT_THROW(split_folds({20, 4, 4, std::nullopt}), ConfigError);
}

TEST(SplitFolds, PartitionPropertyOverRandomSpecs) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int folds = rng.uniform_int(1, 6);
    const int classes = folds * rng.uniform_int(1, 10);
    FoldSpec spec{classes, folds, rng.uniform_int(0, folds - 1), std::nullopt};
    if (rng.uniform() < 0.5) {
      std::vector<int> perm = range(0, classes);
      rng.shuffle(std::span<int>(perm));
      spec = remap_classes(spec, perm);
    }
    const auto split = split_folds(spec);
    std::vector<int> all = split.train_classes;
    all.insert(all.end(), split.test_classes.begin(), split.test_classes.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, range(0, classes));
  }
}

TEST(RemapClasses, IdentityLeavesFoldsUnchanged) {
  const FoldSpec base{20, 4, 1, std::nullopt};
  const auto remapped = remap_classes(base, range(0, 20));
  EXPECT_EQ(split_folds(remapped).test_classes, split_folds(base).test_classes);
  EXPECT_EQ(split_folds(remapped).train_classes, split_folds(base).train_classes);
}

TEST(RemapClasses, ReversalFoldZero) {
  std::vector<int> reversal = range(0, 20);
  std::reverse(reversal.begin(), reversal.end());
  const auto split = split_folds(remap_classes({20, 4, 0, std::nullopt}, reversal));
  EXPECT_EQ(split.test_classes, expected_test(20, 4, 0, &reversal));
  EXPECT_EQ(split.test_classes, (std::vector<int>{19, 18, 17, 16, 15}));
}

TEST(RemapClasses, DuplicateTargetRejected) {
  std::vector<int> perm = range(0, 20);
  perm[3] = 4;
  EXPECT_THROW(remap_classes({20, 4, 0, std::nullopt}, perm), ConfigError);
}

TEST(RemapClasses, BlockShiftMovesEachFoldByOneBlock) {
  const auto perm = block_shift_permutation(20, 4);
  const auto split = split_folds(remap_classes({20, 4, 0, std::nullopt}, perm));
  EXPECT_EQ(split.test_classes, range(5, 10));
}

std::vector<LabeledImage> pool_of(int class_id, int count, int first_value = 0) {
  std::vector<LabeledImage> pool;
  for (int i = 0; i < count; ++i) {
    LabeledImage item{Image(4, 4, (first_value + i) / 16.0), MaskBitmap(4, 4, 1), class_id};
    pool.push_back(item);
  }
  return pool;
}

TEST(SampleEpisode, SupportAndQueryAreDistinct) {
  auto pool = pool_of(3, 6);
  const auto other = pool_of(1, 4, 8);
  pool.insert(pool.end(), other.begin(), other.end());
  const Episode e = sample_episode(pool, 3, 5, 7);
  EXPECT_EQ(e.shots(), 5);
  EXPECT_EQ(e.class_id, 3);
  std::set<double> seen;
  for (const auto& img : e.support_images) EXPECT_TRUE(seen.insert(img.data[0]).second);
  EXPECT_TRUE(seen.insert(e.query_image.data[0]).second);
  for (const double v : seen) EXPECT_LT(v, 6 / 16.0);
}

TEST(SampleEpisode, SameSeedSameEpisode) {
  const auto pool = pool_of(2, 9);
  EXPECT_EQ(sample_episode(pool, 2, 3, 99), sample_episode(pool, 2, 3, 99));
}

TEST(SampleEpisode, TwoItemPoolHitsBothAssignments) {
  const auto pool = pool_of(0, 2);
  std::set<std::pair<double, double>> assignments;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const Episode e = sample_episode(pool, 0, 1, seed);
    assignments.insert({e.support_images[0].data[0], e.query_image.data[0]});
    EXPECT_NE(e.support_images[0].data[0], e.query_image.data[0]);
  }
  const std::set<std::pair<double, double>> expected{{0.0, 1 / 16.0}, {1 / 16.0, 0.0}};
  EXPECT_EQ(assignments, expected);
}

TEST(SampleEpisode, InsufficientItemsNamesClass) {
  const auto pool = pool_of(4, 3);
  try {
    sample_episode(pool, 4, 3, 0);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("class 4"), std::string::npos);
  }
}

TEST(SampleEpisode, QueryNeverInSupportProperty) {
  const auto pool = pool_of(5, 12);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Episode e = sample_episode(pool, 5, 1 + static_cast<int>(seed % 5), seed);
    for (const auto& img : e.support_images) EXPECT_NE(img, e.query_image);
  }
}

TEST(EpisodeValidate, RejectsInconsistentEpisodes) {
  Episode e;
  EXPECT_THROW(e.validate(), DataError);
  e.support_images = {Image(4, 4)};
  e.support_masks = {MaskBitmap(4, 4), MaskBitmap(4, 4)};
  e.query_image = Image(4, 4);
  e.query_mask = MaskBitmap(4, 4);
  EXPECT_THROW(e.validate(), DataError);
  e.support_masks = {MaskBitmap(5, 4)};
  EXPECT_THROW(e.validate(), ShapeError);
  e.support_masks = {MaskBitmap(4, 4)};
  e.support_masks[0].data[3] = 2;
  EXPECT_THROW(e.validate(), DataError);
  e.support_masks[0].data[3] = 1;
  EXPECT_NO_THROW(e.validate());
}

}  // namespace
}  // namespace msi
