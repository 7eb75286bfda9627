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
#ifndef MSI_EPISODE_HPP_
#define MSI_EPISODE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msi/tensor.hpp"

namespace msi {

// One few-shot task: k annotated support pairs plus one annotated query.
struct Episode {
  std::vector<Image> support_images;
  std::vector<MaskBitmap> support_masks;
  Image query_image;
  MaskBitmap query_mask;
  int class_id = 0;

  int shots() const { return static_cast<int>(support_images.size()); }

  // Checks k >= 1, matching support cardinalities, mask/image dims and mask
  // binarity.
  void validate() const;

  bool operator==(const Episode&) const = default;
};

// An annotated image belonging to a sampling pool.
struct LabeledImage {
  Image image;
  MaskBitmap mask;
  int class_id = 0;
};

// Class partition for cross-validation. Test classes of fold f are the
// contiguous block [f * b, (f + 1) * b) of (optionally permuted) class ids,
// where b = num_classes / num_folds unless test_block overrides it.
struct FoldSpec {
  int num_classes = 0;
  int num_folds = 1;
  int fold_index = 0;
  // permutation[i] is the class id placed at position i.
  std::optional<std::vector<int>> permutation;
  // Test classes per fold, for benchmarks whose folds do not tile the class
  // list (for example 20 per fold over 100 classes).
  std::optional<int> test_block;

  void validate() const;
  int block_size() const { return test_block ? *test_block : num_classes / num_folds; }
};

struct FoldSplit {
  std::vector<int> train_classes;
  std::vector<int> test_classes;
};

FoldSplit split_folds(const FoldSpec& fold);

// Installs `permutation` into the fold. Throws ConfigError unless it is a
// bijection over [0, num_classes).
FoldSpec remap_classes(FoldSpec fold, std::vector<int> permutation);

// Circular shift by one fold block; the shipped default for the
// cross-dataset generalization test.
std::vector<int> block_shift_permutation(int num_classes, int num_folds);

// Draws k support items and one distinct query item of `class_id` from the
// pool. Throws DataError if fewer than k + 1 items of the class exist.
Episode sample_episode(std::span<const LabeledImage> pool, int class_id, int k,
                       std::uint64_t seed);

}  // namespace msi

#endif  // MSI_EPISODE_HPP_
