// Copyright 2026 The DBSGen Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dbsgen/segmentation/segmentation.hpp"
#include "dbsgen/tensor/tensor.hpp"

namespace dbsgen::io {

/// Ground-truth pixel classes (gray values 0, 50, 85, 170, 255).
enum class Label : std::uint8_t { static_bg, shadow, outside_roi, unknown, moving };

/// Throws DataError for a gray value outside the five-class table.
Label label_from_gray(std::uint8_t gray);
std::uint8_t gray_from_label(Label label);

struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Label> values;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, Label fill = Label::static_bg) : height(h), width(w), values(h * w, fill) {}
  Label& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  Label at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  bool operator==(const LabelMap&) const = default;
};

struct SequenceManifest {
  std::string name;
  std::vector<std::filesystem::path> frame_files;
  std::vector<std::filesystem::path> gt_files;  // empty when there is no ground truth
  // 1-based inclusive evaluation range over the loaded frames.
  std::size_t roi_first = 1;
  std::size_t roi_last = 0;
  std::size_t first_index = 1;  // file number of the first loaded frame
  std::size_t height = 0;       // padded to a multiple of 8
  std::size_t width = 0;
  std::size_t original_height = 0;
  std::size_t original_width = 0;
  std::size_t frames = 0;
};

struct Sequence {
  SequenceManifest manifest;
  std::vector<Tensor> frames;          // [3 x height x width] RGB in [0, 1], padded
  std::vector<LabelMap> ground_truth;  // original size, empty without ground truth
};

struct LoadOptions {
  // 1-based file number to start from; 0 starts at the temporal ROI.
  std::size_t start = 1;
  // Upper bound on frames loaded; 0 loads all.
  std::size_t max_frames = 0;
  // Integer downscale factor applied to frames and ground truth.
  int downscale = 1;
};

/// Reads input/in%06d.jpg, optional groundtruth/gt%06d.png and
/// temporalROI.txt. Throws DataError when input/ is missing, a file cannot be
/// decoded, or frame and ground-truth counts differ.
Sequence load_cdnet_sequence(const std::filesystem::path& directory, const LoadOptions& options = {});

/// Every .jpg, .jpeg, .png or .bmp file of a directory in file-name order,
/// without ground truth; `start` counts positions from 1 (0 acts as 1) and
/// the evaluation range covers every loaded frame.
Sequence load_frame_directory(const std::filesystem::path& directory, const LoadOptions& options = {});

/// CDnet layout when `directory/input` exists, otherwise a plain frame directory.
Sequence load_sequence(const std::filesystem::path& directory, const LoadOptions& options = {});

/// Edge-replication padding of a [c x h x w] image to [c x height x width].
Tensor pad_image(const Tensor& image, std::size_t height, std::size_t width);
/// Top-left [c x height x width] window.
Tensor crop_image(const Tensor& image, std::size_t height, std::size_t width);
segmentation::Mask crop_mask(const segmentation::Mask& mask, std::size_t height, std::size_t width);

/// Smallest multiple of 8 that is >= n.
std::size_t padded_size(std::size_t n);

/// Writes bin%06d.png files (0 / 255) numbered from `first_index`, cropped to
/// `crop` (height, width) when given.
void write_masks(const std::vector<segmentation::Mask>& masks, const std::filesystem::path& directory,
                 std::size_t first_index = 1,
                 std::optional<std::pair<std::size_t, std::size_t>> crop = std::nullopt);

/// Reads `count` bin%06d.png files numbered from `first_index`; nonzero is set.
std::vector<segmentation::Mask> read_masks(const std::filesystem::path& directory, std::size_t first_index,
                                           std::size_t count);

std::string frame_file_name(const char* prefix, std::size_t index, const char* extension);

/// 8-bit RGB image of a [3 x H x W] tensor in [0, 1] (values are clamped).
void write_rgb(const Tensor& image, const std::filesystem::path& path);
/// 8-bit grayscale image of an H x W map in [0, 1], scaled by 255 and rounded.
void write_gray(const Tensor& map, const std::filesystem::path& path);

/// Motion map file: a text header line "DBSGEN-MOTION 1 <height> <width>"
/// followed by height * width (dx, dy) pairs of little-endian float32, row-major.
void write_motion(const Tensor& motion, const std::filesystem::path& path);
Tensor read_motion(const std::filesystem::path& path);

}  // namespace dbsgen::io
