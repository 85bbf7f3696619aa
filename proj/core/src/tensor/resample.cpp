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

#include <algorithm>

#include "conv_kernels.hpp"
#include "dbsgen/tensor/warp.hpp"

namespace dbsgen {

using detail::Taps;
using detail::upsample_taps;

Tensor downsample2x(const Tensor& image) {
  if (image.rank() != 3) throw ShapeError("resample2x: expected (c x h x w), got " + to_string(image.shape()));
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h % 2 != 0 || w % 2 != 0) throw ShapeError("resample2x down: odd dimensions " + to_string(image.shape()));
  Tensor out(Shape{c, h / 2, w / 2});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h / 2; ++y)
      for (std::size_t x = 0; x < w / 2; ++x) {
        out.at(ch, y, x) = 0.25 * (image.at(ch, 2 * y, 2 * x) + image.at(ch, 2 * y, 2 * x + 1) +
                                   image.at(ch, 2 * y + 1, 2 * x) + image.at(ch, 2 * y + 1, 2 * x + 1));
      }
  return out;
}

Tensor upsample2x(const Tensor& image, bool scale_values) {
  if (image.rank() != 3) throw ShapeError("resample2x: expected (c x h x w), got " + to_string(image.shape()));
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const double factor = scale_values ? 2.0 : 1.0;
  Tensor out(Shape{c, 2 * h, 2 * w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < 2 * h; ++y) {
      const Taps ty = upsample_taps(y, h);
      for (std::size_t x = 0; x < 2 * w; ++x) {
        const Taps tx = upsample_taps(x, w);
        const double v = ty.w0 * (tx.w0 * image.at(ch, ty.i0, tx.i0) + tx.w1 * image.at(ch, ty.i0, tx.i1)) +
                         ty.w1 * (tx.w0 * image.at(ch, ty.i1, tx.i0) + tx.w1 * image.at(ch, ty.i1, tx.i1));
        out.at(ch, y, x) = factor * v;
      }
    }
  return out;
}

}  // namespace dbsgen
