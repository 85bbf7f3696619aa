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

#include "dbsgen/segmentation/segmentation.hpp"

#include <cmath>
#include <string>

#include <opencv2/imgproc.hpp>

#include "dbsgen/error.hpp"
#include "dbsgen/tensor/warp.hpp"

namespace dbsgen::segmentation {

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (std::uint8_t v : values) n += v;
  return n;
}

Tensor extract_foreground(const Tensor& image, const Tensor& motion, const Tensor& background) {
  require_same_shape(image, background, "extract_foreground");
  if (motion.rank() != 3 || motion.dim(0) != 2 || motion.dim(1) != image.dim(1) || motion.dim(2) != image.dim(2)) {
    throw ShapeError("extract_foreground: motion " + to_string(motion.shape()) + " does not match image " +
                     to_string(image.shape()));
  }
  return inverse_warp(warp_image(image, motion) - background, motion);
}

namespace {

void check_foreground(const Tensor& f, const Tensor& first) {
  if (f.rank() != 3 || f.dim(0) != 3) throw ShapeError("foreground must be [3 x H x W], got " + to_string(f.shape()));
  require_same_shape(f, first, "initial_segmentation");
}

}  // namespace

InitialSegmentation initial_segmentation(const std::vector<Tensor>& foreground, double scale) {
  if (foreground.size() < 2) throw ArgumentError("initial segmentation needs at least two frames");
  const Tensor& first = foreground.front();
  for (const Tensor& f : foreground) check_foreground(f, first);
  const std::size_t h = first.dim(1), w = first.dim(2), plane = h * w;
  const double count = static_cast<double>(foreground.size() * plane);

  InitialSegmentation out;
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (const Tensor& f : foreground) {
      for (std::size_t p = 0; p < plane; ++p) sum += std::abs(f[c * plane + p]);
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (const Tensor& f : foreground) {
      for (std::size_t p = 0; p < plane; ++p) {
        const double d = std::abs(f[c * plane + p]) - mean;
        ss += d * d;
      }
    }
    out.stats.mu[c] = mean;
    out.stats.sigma[c] = std::sqrt(ss / count);
  }

  for (const Tensor& f : foreground) {
    Mask combined(h, w);
    std::array<Mask, 3> channels{Mask(h, w), Mask(h, w), Mask(h, w)};
    for (std::size_t c = 0; c < 3; ++c) {
      const double t = scale * out.stats.sigma[c];
      for (std::size_t p = 0; p < plane; ++p) {
        if (std::abs(f[c * plane + p]) > t) {
          channels[c].values[p] = 1;
          combined.values[p] = 1;
        }
      }
    }
    out.combined.push_back(std::move(combined));
    out.per_channel.push_back(std::move(channels));
  }
  return out;
}

namespace {

Tensor flip_rate(const std::vector<const Mask*>& masks) {
  const std::size_t h = masks.front()->height, w = masks.front()->width;
  Tensor c(Shape{h, w});
  for (std::size_t i = 1; i < masks.size(); ++i) {
    if (masks[i]->height != h || masks[i]->width != w) throw ShapeError("dynamic_entropy: mask sizes differ");
    for (std::size_t p = 0; p < h * w; ++p) c[p] += masks[i]->values[p] != masks[i - 1]->values[p] ? 1.0 : 0.0;
  }
  const double transitions = static_cast<double>(masks.size() - 1);
  for (double& v : c.values()) v /= transitions;
  return c;
}

}  // namespace

EntropyMap dynamic_entropy(const std::vector<Mask>& combined, const std::vector<std::array<Mask, 3>>& per_channel) {
  if (combined.size() < 2) throw ArgumentError("dynamic entropy needs at least two frames");
  if (per_channel.size() != combined.size()) throw ShapeError("dynamic_entropy: per-channel mask count differs");
  std::vector<const Mask*> list;
  for (const Mask& m : combined) list.push_back(&m);
  EntropyMap out;
  out.combined = flip_rate(list);
  const std::size_t h = combined.front().height, w = combined.front().width;
  out.per_channel = Tensor(Shape{3, h, w});
  for (std::size_t c = 0; c < 3; ++c) {
    list.clear();
    for (const auto& m : per_channel) list.push_back(&m[c]);
    const Tensor rate = flip_rate(list);
    if (rate.size() != h * w) throw ShapeError("dynamic_entropy: per-channel mask size differs");
    std::copy(rate.data(), rate.data() + h * w, out.per_channel.data() + c * h * w);
  }
  return out;
}

std::array<double, 3> spatial_variance(const Tensor& per_channel) {
  if (per_channel.rank() != 3 || per_channel.dim(0) != 3) {
    throw ShapeError("spatial_variance expects [3 x H x W], got " + to_string(per_channel.shape()));
  }
  const std::size_t plane = per_channel.dim(1) * per_channel.dim(2);
  std::array<double, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    const double* v = per_channel.data() + c * plane;
    double mean = 0.0;
    for (std::size_t p = 0; p < plane; ++p) mean += v[p];
    mean /= static_cast<double>(plane);
    double ss = 0.0;
    for (std::size_t p = 0; p < plane; ++p) ss += (v[p] - mean) * (v[p] - mean);
    out[c] = ss / static_cast<double>(plane);
  }
  return out;
}

Tensor distance_thresholds(const ChannelStats& stats, const Tensor& entropy, const Betas& betas) {
  if (entropy.rank() != 2) throw ShapeError("distance_thresholds expects an H x W entropy map");
  const std::size_t plane = entropy.size();
  Tensor r(Shape{3, entropy.dim(0), entropy.dim(1)});
  for (std::size_t c = 0; c < 3; ++c) {
    const double base = stats.mu[c] + betas.beta1 * stats.sigma[c];
    const double slope = betas.beta2 * stats.sigma[c] + betas.beta3 * stats.var_c[c];
    for (std::size_t p = 0; p < plane; ++p) r[c * plane + p] = base + slope * entropy[p];
  }
  return r;
}

Mask final_segmentation(const Tensor& foreground, const Tensor& thresholds) {
  require_same_shape(foreground, thresholds, "final_segmentation");
  if (foreground.rank() != 3 || foreground.dim(0) != 3) throw ShapeError("final_segmentation expects [3 x H x W]");
  const std::size_t h = foreground.dim(1), w = foreground.dim(2), plane = h * w;
  Mask m(h, w);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (std::abs(foreground[c * plane + p]) > thresholds[c * plane + p]) m.values[p] = 1;
    }
  }
  return m;
}

namespace {

void check_kernel(int k, const char* what) {
  if (k < 1 || k % 2 == 0) throw ArgumentError(std::string(what) + " kernel size must be odd and positive, got " + std::to_string(k));
}

cv::Mat as_mat(Mask& m) {
  return cv::Mat(static_cast<int>(m.height), static_cast<int>(m.width), CV_8UC1, m.values.data());
}

}  // namespace

Mask close(const Mask& mask, int k) {
  check_kernel(k, "closing");
  Mask out = mask;
  if (k == 1 || mask.values.empty()) return out;
  Mask in = mask;
  cv::Mat dst = as_mat(out);
  cv::morphologyEx(as_mat(in), dst, cv::MORPH_CLOSE, cv::getStructuringElement(cv::MORPH_RECT, cv::Size(k, k)));
  return out;
}

Mask post_process(const Mask& mask, int median_k, int closing_k) {
  check_kernel(median_k, "median");
  check_kernel(closing_k, "closing");
  Mask out = mask;
  if (median_k > 1 && !mask.values.empty()) {
    Mask in = mask;
    cv::Mat dst = as_mat(out);
    cv::medianBlur(as_mat(in), dst, median_k);
  }
  return close(out, closing_k);
}

SegmentationResult segment_sequence(const std::vector<Tensor>& frames, const std::vector<Tensor>& motion,
                                    const std::vector<Tensor>& backgrounds, const SegmentationConfig& config) {
  if (frames.size() != motion.size() || frames.size() != backgrounds.size()) {
    throw ShapeError("segment_sequence: frame, motion and background counts differ");
  }
  std::vector<Tensor> foreground;
  foreground.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    foreground.push_back(extract_foreground(frames[i], motion[i], backgrounds[i]));
  }
  InitialSegmentation init = initial_segmentation(foreground, config.initial_scale);
  SegmentationResult out;
  out.entropy = dynamic_entropy(init.combined, init.per_channel);
  out.stats = init.stats;
  out.stats.var_c = spatial_variance(out.entropy.per_channel);
  const Tensor r = distance_thresholds(out.stats, out.entropy.combined, config.betas);
  for (const Tensor& f : foreground) {
    out.raw.push_back(final_segmentation(f, r));
    out.masks.push_back(config.postprocess ? post_process(out.raw.back(), config.median_k, config.closing_k)
                                           : out.raw.back());
  }
  return out;
}

}  // namespace dbsgen::segmentation
