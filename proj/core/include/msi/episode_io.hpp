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
#ifndef MSI_EPISODE_IO_HPP_
#define MSI_EPISODE_IO_HPP_

#include <filesystem>
#include <vector>

#include "msi/episode.hpp"

namespace msi {

// Episode directory layout:
//
//   manifest.json   {"class_id", "k", "width", "height",
//                    "files": {"support_images": [...], "support_masks": [...],
//                              "query_image": "...", "query_mask": "..."}}
//   *.png           images as 8-bit RGB, masks as 8-bit gray in {0, 255}
//
// File names in the manifest are relative to the directory.
void save_episode_dir(const Episode& episode, const std::filesystem::path& dir);
Episode load_episode_dir(const std::filesystem::path& dir);

// Every immediate subdirectory of `root` that holds a manifest.json, sorted
// by name.
std::vector<std::filesystem::path> list_episode_dirs(const std::filesystem::path& root);

}  // namespace msi

#endif  // MSI_EPISODE_IO_HPP_
