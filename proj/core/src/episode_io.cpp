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
#include "msi/episode_io.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "msi/error.hpp"
#include "msi/png_io.hpp"

namespace msi {
namespace {

using nlohmann::json;

GrayRaster mask_to_raster(const MaskBitmap& mask) {
  GrayRaster raster{mask.width, mask.height, {}};
  raster.data.reserve(mask.data.size());
  for (const auto v : mask.data) raster.data.push_back(v ? 255 : 0);
  return raster;
}

MaskBitmap load_mask(const std::filesystem::path& path) {
  const auto raster = read_png_gray(path);
  MaskBitmap mask(raster.width, raster.height);
  for (std::size_t i = 0; i < raster.data.size(); ++i) {
    const auto v = raster.data[i];
    if (v != 0 && v != 255) {
      throw DataError("mask " + path.string() + " is not binary: pixel " +
                      std::to_string(i) + " has value " + std::to_string(v) +
                      " (expected 0 or 255)");
    }
    mask.data[i] = v == 255 ? 1 : 0;
  }
  return mask;
}

template <typename T>
T require(const json& j, const char* key, const std::filesystem::path& where) {
  if (!j.contains(key)) {
    throw DataError("manifest " + where.string() + " lacks field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError("manifest " + where.string() + " field '" + key +
                    "' has the wrong type: " + e.what());
  }
}

void check_dims(const std::filesystem::path& file, int w, int h, int width,
                int height) {
  if (w != width || h != height) {
    throw DataError(file.string() + " is " + std::to_string(w) + "x" +
                    std::to_string(h) + " but the manifest declares " +
                    std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

void save_episode_dir(const Episode& episode, const std::filesystem::path& dir) {
  episode.validate();
  std::filesystem::create_directories(dir);
  json files;
  files["support_images"] = json::array();
  files["support_masks"] = json::array();
  for (int i = 0; i < episode.shots(); ++i) {
    const std::string img = "support_image_" + std::to_string(i) + ".png";
    const std::string msk = "support_mask_" + std::to_string(i) + ".png";
    write_png_rgb(dir / img, episode.support_images[static_cast<std::size_t>(i)]);
    write_png_gray(dir / msk, mask_to_raster(episode.support_masks[static_cast<std::size_t>(i)]));
    files["support_images"].push_back(img);
    files["support_masks"].push_back(msk);
  }
  write_png_rgb(dir / "query_image.png", episode.query_image);
  write_png_gray(dir / "query_mask.png", mask_to_raster(episode.query_mask));
  files["query_image"] = "query_image.png";
  files["query_mask"] = "query_mask.png";

  json manifest;
  manifest["class_id"] = episode.class_id;
  manifest["k"] = episode.shots();
  manifest["width"] = episode.query_image.width;
  manifest["height"] = episode.query_image.height;
  manifest["files"] = files;

  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

Episode load_episode_dir(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("missing file: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("cannot parse " + manifest_path.string() + ": " + e.what());
  }

  const int k = require<int>(manifest, "k", manifest_path);
  const int width = require<int>(manifest, "width", manifest_path);
  const int height = require<int>(manifest, "height", manifest_path);
  const auto files = require<json>(manifest, "files", manifest_path);
  const auto images = require<std::vector<std::string>>(files, "support_images", manifest_path);
  const auto masks = require<std::vector<std::string>>(files, "support_masks", manifest_path);
  if (k < 1) throw DataError("manifest " + manifest_path.string() + " declares k < 1");
  if (static_cast<int>(images.size()) != k || static_cast<int>(masks.size()) != k) {
    throw DataError("manifest " + manifest_path.string() + " declares k=" +
                    std::to_string(k) + " but lists " +
                    std::to_string(images.size()) + " support images and " +
                    std::to_string(masks.size()) + " support masks");
  }

  Episode episode;
  episode.class_id = require<int>(manifest, "class_id", manifest_path);
  for (int i = 0; i < k; ++i) {
    const auto img_path = dir / images[static_cast<std::size_t>(i)];
    const auto msk_path = dir / masks[static_cast<std::size_t>(i)];
    auto image = read_png_rgb(img_path);
    auto mask = load_mask(msk_path);
    check_dims(img_path, image.width, image.height, width, height);
    check_dims(msk_path, mask.width, mask.height, width, height);
    episode.support_images.push_back(std::move(image));
    episode.support_masks.push_back(std::move(mask));
  }
  const auto qi_path = dir / require<std::string>(files, "query_image", manifest_path);
  const auto qm_path = dir / require<std::string>(files, "query_mask", manifest_path);
  episode.query_image = read_png_rgb(qi_path);
  episode.query_mask = load_mask(qm_path);
  check_dims(qi_path, episode.query_image.width, episode.query_image.height, width, height);
  check_dims(qm_path, episode.query_mask.width, episode.query_mask.height, width, height);
  episode.validate();
  return episode;
}

std::vector<std::filesystem::path> list_episode_dirs(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw DataError("episode root is not a directory: " + root.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace msi
