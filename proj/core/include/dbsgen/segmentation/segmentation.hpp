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

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dbsgen/tensor/tensor.hpp"

namespace dbsgen::segmentation {

/// Binary H x W mask, one byte per pixel holding 0 or 1.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  std::size_t count() const;
  bool operator==(const Mask&) const = default;
};

/// Per-channel statistics feeding the distance thresholds.
struct ChannelStats {
  std::array<double, 3> mu{};     // mean of |F|
  std::array<double, 3> sigma{};  // standard deviation of |F|
  std::array<double, 3> var_c{};  // spatial variance of the per-channel entropy map
};

struct Betas {
  double beta1 = 1.0;
  double beta2 = 2.0;
  double beta3 = 2.0;
};

/// F = inverse_warp(warp(I, M) - B, M), signed, [3 x H x W].
Tensor extract_foreground(const Tensor& image, const Tensor& motion, const Tensor& background);

struct InitialSegmentation {
  std::vector<Mask> combined;                   // OR over channels, per frame
  std::vector<std::array<Mask, 3>> per_channel;  // per frame and channel
  ChannelStats stats;                           // mu and sigma filled
};

/// Thresholds |F| at scale * sigma per channel, with sigma and mu taken over
/// every frame and pixel. Throws ArgumentError for fewer than two frames.
InitialSegmentation initial_segmentation(const std::vector<Tensor>& foreground, double scale = 1.0);

struct EntropyMap {
  Tensor combined;     // H x W
  Tensor per_channel;  // 3 x H x W
};

/// Fraction of consecutive frame pairs in which each pixel's mask flips.
/// Throws ArgumentError for fewer than two frames.
EntropyMap dynamic_entropy(const std::vector<Mask>& combined, const std::vector<std::array<Mask, 3>>& per_channel);

/// Population variance over pixels of each channel of a [3 x H x W] map.
std::array<double, 3> spatial_variance(const Tensor& per_channel);

/// R_ch(x) = mu + b1 sigma + b2 sigma C(x) + b3 var_C C(x), as [3 x H x W]
/// for an H x W entropy map C.
Tensor distance_thresholds(const ChannelStats& stats, const Tensor& entropy, const Betas& betas);

/// Pixels where |F| exceeds R in at least one channel.
Mask final_segmentation(const Tensor& foreground, const Tensor& thresholds);

/// Binary closing with a k x k square; pixels outside the image never
/// shrink the result. Throws ArgumentError for even or non-positive k.
Mask close(const Mask& mask, int k);

/// Median filter (k = median_k, replicated border) followed by close().
/// A kernel size of 1 skips that step. Throws ArgumentError for even sizes.
Mask post_process(const Mask& mask, int median_k = 5, int closing_k = 3);

struct SegmentationConfig {
  double initial_scale = 1.0;
  Betas betas;
  bool postprocess = true;
  int median_k = 5;
  int closing_k = 3;
};

struct SegmentationResult {
  std::vector<Mask> raw;    // before post-processing
  std::vector<Mask> masks;  // final output (equal to raw when disabled)
  EntropyMap entropy;
  ChannelStats stats;
};

/// Whole segmentation stage for a sequence of frames, full-resolution motion
/// maps and backgrounds.
SegmentationResult segment_sequence(const std::vector<Tensor>& frames, const std::vector<Tensor>& motion,
                                    const std::vector<Tensor>& backgrounds, const SegmentationConfig& config);

}  // namespace dbsgen::segmentation
