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

#include "conv_kernels.hpp"

#include <cstring>

namespace dbsgen::detail {

namespace {

// Range of output columns ox whose input column ox*s + kx - p lies in [0, width).
void valid_range(std::size_t k_off, const ConvGeometry& g, std::size_t extent, std::size_t out_extent,
                 std::size_t& begin, std::size_t& end) {
  const long pad = static_cast<long>(g.pad());
  const long s = static_cast<long>(g.stride);
  const long off = static_cast<long>(k_off) - pad;
  // ox*s + off >= 0  ->  ox >= ceil(-off / s)
  long lo = off >= 0 ? 0 : (-off + s - 1) / s;
  // ox*s + off <= extent-1  ->  ox <= floor((extent-1-off)/s)
  long hi_num = static_cast<long>(extent) - 1 - off;
  long hi = hi_num < 0 ? -1 : hi_num / s;
  if (hi > static_cast<long>(out_extent) - 1) hi = static_cast<long>(out_extent) - 1;
  if (hi < lo) {
    begin = end = 0;
    return;
  }
  begin = static_cast<std::size_t>(lo);
  end = static_cast<std::size_t>(hi) + 1;
}

}  // namespace

void im2col(const double* image, const ConvGeometry& g, double* cols) {
  const std::size_t k = g.kernel;
  const std::size_t out_plane = g.out_height * g.out_width;
  const long pad = static_cast<long>(g.pad());
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = image + c * g.height * g.width;
    for (std::size_t ky = 0; ky < k; ++ky) {
      std::size_t y_begin, y_end;
      valid_range(ky, g, g.height, g.out_height, y_begin, y_end);
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* row = cols + ((c * k + ky) * k + kx) * out_plane;
        std::memset(row, 0, out_plane * sizeof(double));
        std::size_t x_begin, x_end;
        valid_range(kx, g, g.width, g.out_width, x_begin, x_end);
        if (x_begin >= x_end) continue;
        for (std::size_t oy = y_begin; oy < y_end; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - pad;
          const double* src = plane + static_cast<std::size_t>(iy) * g.width;
          double* dst = row + oy * g.out_width;
          if (g.stride == 1) {
            const long ix0 = static_cast<long>(x_begin + kx) - pad;
            std::memcpy(dst + x_begin, src + ix0, (x_end - x_begin) * sizeof(double));
          } else {
            for (std::size_t ox = x_begin; ox < x_end; ++ox) {
              dst[ox] = src[static_cast<long>(ox * g.stride + kx) - pad];
            }
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& g, double* image) {
  const std::size_t k = g.kernel;
  const std::size_t out_plane = g.out_height * g.out_width;
  const long pad = static_cast<long>(g.pad());
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = image + c * g.height * g.width;
    for (std::size_t ky = 0; ky < k; ++ky) {
      std::size_t y_begin, y_end;
      valid_range(ky, g, g.height, g.out_height, y_begin, y_end);
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double* row = cols + ((c * k + ky) * k + kx) * out_plane;
        std::size_t x_begin, x_end;
        valid_range(kx, g, g.width, g.out_width, x_begin, x_end);
        if (x_begin >= x_end) continue;
        for (std::size_t oy = y_begin; oy < y_end; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - pad;
          double* dst = plane + static_cast<std::size_t>(iy) * g.width;
          const double* src = row + oy * g.out_width;
          for (std::size_t ox = x_begin; ox < x_end; ++ox) {
            dst[static_cast<long>(ox * g.stride + kx) - pad] += src[ox];
          }
        }
      }
    }
  }
}

namespace {

// Calls fn(oy, iy, x_begin, x_end, ix_begin) for every output row that the
// kernel tap (ky, kx) reaches inside the image, stride 1.
template <typename Fn>
void for_each_tap_row(const ConvGeometry& g, std::size_t ky, std::size_t kx, Fn&& fn) {
  std::size_t y_begin, y_end, x_begin, x_end;
  valid_range(ky, g, g.height, g.out_height, y_begin, y_end);
  valid_range(kx, g, g.width, g.out_width, x_begin, x_end);
  if (x_begin >= x_end) return;
  const long pad = static_cast<long>(g.pad());
  for (std::size_t oy = y_begin; oy < y_end; ++oy) {
    const auto iy = static_cast<std::size_t>(static_cast<long>(oy + ky) - pad);
    const auto ix = static_cast<std::size_t>(static_cast<long>(x_begin + kx) - pad);
    fn(oy, iy, x_begin, x_end - x_begin, ix);
  }
}

}  // namespace

void direct_conv(const double* x, const ConvGeometry& g, const double* w, std::size_t c_out, double* out) {
  const std::size_t k = g.kernel;
  const std::size_t plane = g.height * g.width;
  for (std::size_t co = 0; co < c_out; ++co) {
    double* dst_plane = out + co * plane;
    for (std::size_t ci = 0; ci < g.channels; ++ci) {
      const double* src_plane = x + ci * plane;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double wv = w[((co * g.channels + ci) * k + ky) * k + kx];
          for_each_tap_row(g, ky, kx, [&](std::size_t oy, std::size_t iy, std::size_t ox, std::size_t n, std::size_t ix) {
            double* __restrict dst = dst_plane + oy * g.width + ox;
            const double* __restrict src = src_plane + iy * g.width + ix;
            for (std::size_t i = 0; i < n; ++i) dst[i] += wv * src[i];
          });
        }
      }
    }
  }
}

void direct_conv_input_grad(const double* dy, const ConvGeometry& g, const double* w, std::size_t c_out, double* dx) {
  const std::size_t k = g.kernel;
  const std::size_t plane = g.height * g.width;
  for (std::size_t ci = 0; ci < g.channels; ++ci) {
    double* dst_plane = dx + ci * plane;
    for (std::size_t co = 0; co < c_out; ++co) {
      const double* src_plane = dy + co * plane;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double wv = w[((co * g.channels + ci) * k + ky) * k + kx];
          for_each_tap_row(g, ky, kx, [&](std::size_t oy, std::size_t iy, std::size_t ox, std::size_t n, std::size_t ix) {
            double* __restrict dst = dst_plane + iy * g.width + ix;
            const double* __restrict src = src_plane + oy * g.width + ox;
            for (std::size_t i = 0; i < n; ++i) dst[i] += wv * src[i];
          });
        }
      }
    }
  }
}

void direct_conv_weight_grad(const double* dy, const double* x, const ConvGeometry& g, std::size_t c_out, double* dw) {
  const std::size_t k = g.kernel;
  const std::size_t plane = g.height * g.width;
  for (std::size_t co = 0; co < c_out; ++co) {
    const double* dy_plane = dy + co * plane;
    for (std::size_t ci = 0; ci < g.channels; ++ci) {
      const double* x_plane = x + ci * plane;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for_each_tap_row(g, ky, kx, [&](std::size_t oy, std::size_t iy, std::size_t ox, std::size_t n, std::size_t ix) {
            const double* a = dy_plane + oy * g.width + ox;
            const double* b = x_plane + iy * g.width + ix;
            double row = 0.0;
            for (std::size_t i = 0; i < n; ++i) row += a[i] * b[i];
            acc += row;
          });
          dw[((co * g.channels + ci) * k + ky) * k + kx] += acc;
        }
      }
    }
  }
}

}  // namespace dbsgen::detail
