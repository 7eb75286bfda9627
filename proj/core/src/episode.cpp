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
#include "msi/episode.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "msi/error.hpp"
#include "msi/rng.hpp"

namespace msi {
namespace {

void check_pair(const Image& image, const MaskBitmap& mask,
                const std::string& what) {
  if (image.width <= 0 || image.height <= 0 ||
      image.data.size() !=
          static_cast<std::size_t>(Image::kChannels) * image.width *
              image.height) {
    throw ShapeError(what + " image has invalid dimensions");
  }
  mask.validate();
  if (mask.width != image.width || mask.height != image.height) {
    throw ShapeError(what + " mask is " + std::to_string(mask.width) + "x" +
                     std::to_string(mask.height) + " but its image is " +
                     std::to_string(image.width) + "x" +
                     std::to_string(image.height));
  }
}

bool is_bijection(const std::vector<int>& permutation, int n) {
  if (static_cast<int>(permutation.size()) != n) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const int v : permutation) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

}  // namespace

void Episode::validate() const {
  if (support_images.empty()) {
    throw DataError("episode has no support items (k must be >= 1)");
  }
  if (support_images.size() != support_masks.size()) {
    throw DataError("episode has " + std::to_string(support_images.size()) +
                    " support images but " +
                    std::to_string(support_masks.size()) + " support masks");
  }
  for (std::size_t i = 0; i < support_images.size(); ++i) {
    check_pair(support_images[i], support_masks[i],
               "support " + std::to_string(i));
  }
  check_pair(query_image, query_mask, "query");
}

void FoldSpec::validate() const {
  if (num_classes <= 0 || num_folds <= 0) {
    throw ConfigError("fold spec needs positive num_classes and num_folds");
  }
  if (fold_index < 0 || fold_index >= num_folds) {
    throw ConfigError("fold_index " + std::to_string(fold_index) +
                      " outside [0, " + std::to_string(num_folds) + ")");
  }
  if (num_classes % num_folds != 0) {
    throw ConfigError(std::to_string(num_classes) +
                      " classes cannot be split evenly into " +
                      std::to_string(num_folds) + " folds");
  }
  if (test_block && (*test_block < 1 || *test_block * num_folds > num_classes)) {
    throw ConfigError("test_block " + std::to_string(*test_block) + " x " +
                      std::to_string(num_folds) + " folds exceeds " +
                      std::to_string(num_classes) + " classes");
  }
  if (permutation && !is_bijection(*permutation, num_classes)) {
    throw ConfigError("class permutation is not a bijection over [0, " +
                      std::to_string(num_classes) + ")");
  }
}

FoldSplit split_folds(const FoldSpec& fold) {
  fold.validate();
  const int block = fold.block_size();
  const int begin = fold.fold_index * block;
  const int end = begin + block;
  FoldSplit split;
  for (int i = 0; i < fold.num_classes; ++i) {
    const int id = fold.permutation ? (*fold.permutation)[i] : i;
    if (i >= begin && i < end) {
      split.test_classes.push_back(id);
    } else {
      split.train_classes.push_back(id);
    }
  }
  return split;
}

FoldSpec remap_classes(FoldSpec fold, std::vector<int> permutation) {
  if (!is_bijection(permutation, fold.num_classes)) {
    throw ConfigError("class permutation is not a bijection over [0, " +
                      std::to_string(fold.num_classes) + ")");
  }
  fold.permutation = std::move(permutation);
  return fold;
}

std::vector<int> block_shift_permutation(int num_classes, int num_folds) {
  if (num_folds <= 0 || num_classes % num_folds != 0) {
    throw ConfigError("block shift needs num_classes divisible by num_folds");
  }
  const int block = num_classes / num_folds;
  std::vector<int> permutation(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < num_classes; ++i) {
    permutation[static_cast<std::size_t>(i)] = (i + block) % num_classes;
  }
  return permutation;
}

Episode sample_episode(std::span<const LabeledImage> pool, int class_id, int k,
                       std::uint64_t seed) {
  if (k < 1) throw ConfigError("shot count k must be >= 1");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].class_id == class_id) candidates.push_back(i);
  }
  if (candidates.size() < static_cast<std::size_t>(k) + 1) {
    throw DataError("class " + std::to_string(class_id) + " has " +
                    std::to_string(candidates.size()) +
                    " items in the pool; an episode needs " +
                    std::to_string(k + 1));
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first k + 1 slots become the draw.
  for (std::size_t i = 0; i <= static_cast<std::size_t>(k); ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(
        static_cast<int>(i), static_cast<int>(candidates.size() - 1)));
    std::swap(candidates[i], candidates[j]);
  }
  Episode episode;
  episode.class_id = class_id;
  for (int s = 0; s < k; ++s) {
    const auto& item = pool[candidates[static_cast<std::size_t>(s)]];
    episode.support_images.push_back(item.image);
    episode.support_masks.push_back(item.mask);
  }
  const auto& query = pool[candidates[static_cast<std::size_t>(k)]];
  episode.query_image = query.image;
  episode.query_mask = query.mask;
  return episode;
}

}  // namespace msi
