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

#include <algorithm>
#include <cstddef>

namespace dbsgen::detail {

/// Geometry of a "same"-padded strided cross-correlation. The fine grid is
/// (height x width); the coarse grid is (height/stride x width/stride).
struct ConvGeometry {
  std::size_t channels;
  std::size_t height;
  std::size_t width;
  std::size_t kernel;
  std::size_t stride;
  std::size_t out_height;
  std::size_t out_width;
  std::size_t pad() const { return kernel / 2; }
};

/// cols[(c, ky, kx)][(oy, ox)] = image[c](oy*s + ky - p, ox*s + kx - p), zero outside.
void im2col(const double* image, const ConvGeometry& g, double* cols);

/// Scatter-add adjoint of im2col.
void col2im(const double* cols, const ConvGeometry& g, double* image);

/// Direct stride-1 convolution kernels for layers with few output channels,
/// where im2col traffic outweighs the arithmetic. `w` is [c_out x c_in x k x k]
/// and all three accumulate into their output.
void direct_conv(const double* x, const ConvGeometry& g, const double* w, std::size_t c_out, double* out);
void direct_conv_input_grad(const double* dy, const ConvGeometry& g, const double* w, std::size_t c_out, double* dx);
void direct_conv_weight_grad(const double* dy, const double* x, const ConvGeometry& g, std::size_t c_out, double* dw);

// Source taps of bilinear 2x upsampling with half-pixel alignment.
struct Taps {
  std::size_t i0, i1;
  double w0, w1;
};

inline Taps upsample_taps(std::size_t out_index, std::size_t in_extent) {
  const std::size_t j = out_index / 2;
  if (out_index % 2 == 0) {
    return {j == 0 ? 0 : j - 1, j, 0.25, 0.75};
  }
  return {j, std::min(j + 1, in_extent - 1), 0.75, 0.25};
}

}  // namespace dbsgen::detail
