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

#include "dbsgen/tensor/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "conv_kernels.hpp"
#include "dbsgen/tensor/warp.hpp"

namespace dbsgen::ops {

using detail::Taps;
using detail::upsample_taps;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Below this many output channels a stride-1 convolution runs directly
// instead of through im2col and GEMM.
constexpr std::size_t kDirectConvMaxOutputs = 4;

std::vector<double>& scratch(int slot, std::size_t n) {
  thread_local std::vector<double> buffers[2];
  auto& b = buffers[slot];
  if (b.size() < n) b.resize(n);
  return b;
}

void require_rank(Var v, std::size_t rank, const char* what) {
  if (v.value().rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     to_string(v.shape()));
  }
}

void require_same(Var a, Var b, const char* what) { require_same_shape(a.value(), b.value(), what); }

}  // namespace

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Graph& g = a.graph();
  return g.record(a.value() + b.value(), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) *da += dy;
    if (Tensor* db = g.grad_sink(b)) *db += dy;
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Graph& g = a.graph();
  return g.record(a.value() - b.value(), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) *da += dy;
    if (Tensor* db = g.grad_sink(b)) *db -= dy;
  });
}

Var scale(Var a, double factor) {
  Graph& g = a.graph();
  return g.record(a.value() * factor, {a}, [a, factor](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      for (std::size_t i = 0; i < da->size(); ++i) (*da)[i] += factor * dy[i];
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  Graph& g = a.graph();
  return g.record(Tensor::scalar(total), {a}, [a](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      const double s = dy[0];
      for (double& v : da->values()) v += s;
    }
  });
}

Var sum_squares(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v * v;
  Graph& g = a.graph();
  return g.record(Tensor::scalar(total), {a}, [a](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      const double s = 2.0 * dy[0];
      const Tensor& x = g.value(a);
      for (std::size_t i = 0; i < da->size(); ++i) (*da)[i] += s * x[i];
    }
  });
}

Var l2_norm(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v * v;
  const double norm = std::sqrt(total);
  Graph& g = a.graph();
  return g.record(Tensor::scalar(norm), {a}, [a, norm](Graph& g, const Tensor& dy) {
    if (norm == 0.0) return;
    if (Tensor* da = g.grad_sink(a)) {
      const double s = dy[0] / norm;
      const Tensor& x = g.value(a);
      for (std::size_t i = 0; i < da->size(); ++i) (*da)[i] += s * x[i];
    }
  });
}

Var l1_norm(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += std::abs(v);
  Graph& g = a.graph();
  return g.record(Tensor::scalar(total), {a}, [a](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      const double s = dy[0];
      const Tensor& x = g.value(a);
      for (std::size_t i = 0; i < da->size(); ++i) {
        if (x[i] > 0.0) {
          (*da)[i] += s;
        } else if (x[i] < 0.0) {
          (*da)[i] -= s;
        }
      }
    }
  });
}

Var dot(Var a, const Tensor& weights) {
  require_same_shape(a.value(), weights, "dot");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += a.value()[i] * weights[i];
  Graph& g = a.graph();
  return g.record(Tensor::scalar(total), {a}, [a, weights](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      const double s = dy[0];
      for (std::size_t i = 0; i < da->size(); ++i) (*da)[i] += s * weights[i];
    }
  });
}

Var select(Var a, std::size_t index) {
  const Tensor& x = a.value();
  if (x.rank() < 1 || index >= x.dim(0)) {
    throw ShapeError("select: index " + std::to_string(index) + " out of range for shape " + to_string(x.shape()));
  }
  Shape shape(x.shape().begin() + 1, x.shape().end());
  const std::size_t stride = element_count(shape);
  std::vector<double> values(x.data() + index * stride, x.data() + (index + 1) * stride);
  Graph& g = a.graph();
  return g.record(Tensor(std::move(shape), std::move(values)), {a}, [a, index, stride](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      double* dst = da->data() + index * stride;
      for (std::size_t i = 0; i < stride; ++i) dst[i] += dy[i];
    }
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& indices) {
  require_rank(a, 2, "gather_rows");
  const Tensor& x = a.value();
  const std::size_t cols = x.dim(1);
  Tensor out(Shape{indices.size(), cols});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= x.dim(0)) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(x.data() + indices[r] * cols, cols, out.data() + r * cols);
  }
  Graph& g = a.graph();
  return g.record(std::move(out), {a}, [a, indices, cols](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      for (std::size_t r = 0; r < indices.size(); ++r) {
        double* dst = da->data() + indices[r] * cols;
        const double* src = dy.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = a.graph();
  return g.record(a.value().reshaped(std::move(shape)), {a}, [a](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) {
      for (std::size_t i = 0; i < da->size(); ++i) (*da)[i] += dy[i];
    }
  });
}

Var linear(Var input, Var weights, Var bias) {
  require_rank(weights, 2, "linear weights");
  require_rank(bias, 1, "linear bias");
  const Tensor& x = input.value();
  const std::size_t m = weights.value().dim(0);
  const std::size_t n = weights.value().dim(1);
  if (bias.value().dim(0) != m) throw ShapeError("linear: bias length does not match weight rows");
  const bool vector_input = x.rank() == 1;
  if (!(vector_input || x.rank() == 2) || x.shape().back() != n) {
    throw ShapeError("linear: input shape " + to_string(x.shape()) + " incompatible with weights " +
                     to_string(weights.shape()));
  }
  const std::size_t batch = vector_input ? 1 : x.dim(0);
  Tensor out(vector_input ? Shape{m} : Shape{batch, m});
  {
    ConstMatMap X(x.data(), batch, n);
    ConstMatMap W(weights.value().data(), m, n);
    ConstVecMap b(bias.value().data(), m);
    MatMap Y(out.data(), batch, m);
    Y.noalias() = X * W.transpose();
    for (std::size_t i = 0; i < batch; ++i) Y.row(i) += b.transpose();
  }
  Graph& g = input.graph();
  return g.record(std::move(out), {input, weights, bias}, [=](Graph& g, const Tensor& dy) {
    ConstMatMap dY(dy.data(), batch, m);
    if (Tensor* dx = g.grad_sink(input)) {
      MatMap dX(dx->data(), batch, n);
      dX.noalias() += dY * ConstMatMap(g.value(weights).data(), m, n);
    }
    if (Tensor* dw = g.grad_sink(weights)) {
      MatMap dW(dw->data(), m, n);
      dW.noalias() += dY.transpose() * ConstMatMap(g.value(input).data(), batch, n);
    }
    // Plain loops: Eigen's vectorized reductions depend on buffer alignment.
    if (Tensor* db = g.grad_sink(bias)) {
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < m; ++j) (*db)[j] += dy[i * m + j];
    }
  });
}

Var conv2d(Var input, Var kernels, Var bias, ConvMode mode, std::size_t stride) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  require_rank(bias, 1, "conv2d bias");
  if (stride < 1) throw ArgumentError("conv2d: stride must be >= 1");
  const Tensor& x = input.value();
  const Tensor& w = kernels.value();
  const std::size_t c_out = w.dim(0);
  const std::size_t c_in = w.dim(1);
  const std::size_t k = w.dim(2);
  if (w.dim(3) != k || k % 2 == 0) throw ArgumentError("conv2d: kernels must be square with odd size");
  if (x.dim(0) != c_in) {
    throw ShapeError("conv2d: input has " + std::to_string(x.dim(0)) + " channels, kernels expect " +
                     std::to_string(c_in));
  }
  if (bias.value().dim(0) != c_out) throw ShapeError("conv2d: bias length does not match output channels");
  const std::size_t h = x.dim(1);
  const std::size_t wd = x.dim(2);
  const std::size_t kk = k * k;
  Graph& g = input.graph();

  if (mode == ConvMode::standard) {
    if (h % stride != 0 || wd % stride != 0) throw ShapeError("conv2d: input size not divisible by stride");
    const detail::ConvGeometry geo{c_in, h, wd, k, stride, h / stride, wd / stride};
    const std::size_t plane = geo.out_height * geo.out_width;
    Tensor out(Shape{c_out, geo.out_height, geo.out_width});
    if (stride == 1 && c_out <= kDirectConvMaxOutputs) {
      for (std::size_t co = 0; co < c_out; ++co) {
        std::fill(out.data() + co * plane, out.data() + (co + 1) * plane, bias.value()[co]);
      }
      detail::direct_conv(x.data(), geo, w.data(), c_out, out.data());
      return g.record(std::move(out), {input, kernels, bias}, [=](Graph& g, const Tensor& dy) {
        if (Tensor* dw = g.grad_sink(kernels)) {
          detail::direct_conv_weight_grad(dy.data(), g.value(input).data(), geo, c_out, dw->data());
        }
        if (Tensor* dx = g.grad_sink(input)) {
          detail::direct_conv_input_grad(dy.data(), geo, g.value(kernels).data(), c_out, dx->data());
        }
        if (Tensor* db = g.grad_sink(bias)) {
          for (std::size_t co = 0; co < c_out; ++co) {
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += dy[co * plane + i];
            (*db)[co] += acc;
          }
        }
      });
    }
    auto& cols = scratch(0, c_in * kk * plane);
    detail::im2col(x.data(), geo, cols.data());
    {
      MatMap Y(out.data(), c_out, plane);
      Y.noalias() = ConstMatMap(w.data(), c_out, c_in * kk) * ConstMatMap(cols.data(), c_in * kk, plane);
      for (std::size_t co = 0; co < c_out; ++co) Y.row(co).array() += bias.value()[co];
    }
    return g.record(std::move(out), {input, kernels, bias}, [=](Graph& g, const Tensor& dy) {
      ConstMatMap dY(dy.data(), c_out, plane);
      if (Tensor* dw = g.grad_sink(kernels)) {
        auto& cols = scratch(0, c_in * kk * plane);
        detail::im2col(g.value(input).data(), geo, cols.data());
        MatMap(dw->data(), c_out, c_in * kk).noalias() += dY * ConstMatMap(cols.data(), c_in * kk, plane).transpose();
      }
      if (Tensor* dx = g.grad_sink(input)) {
        auto& dcols = scratch(1, c_in * kk * plane);
        MatMap dC(dcols.data(), c_in * kk, plane);
        dC.noalias() = ConstMatMap(g.value(kernels).data(), c_out, c_in * kk).transpose() * dY;
        detail::col2im(dcols.data(), geo, dx->data());
      }
      if (Tensor* db = g.grad_sink(bias)) {
        for (std::size_t co = 0; co < c_out; ++co) {
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += dy[co * plane + i];
          (*db)[co] += acc;
        }
      }
    });
  }

  // Transposed: adjoint of a standard stride-s convolution from the fine
  // (h*s x w*s) grid with c_out channels down to this (h x w) grid.
  const detail::ConvGeometry geo{c_out, h * stride, wd * stride, k, stride, h, wd};
  const std::size_t plane = h * wd;
  // Wt[(co, ky, kx)][ci] = W[co][ci][ky][kx]
  auto permute = [=](const Tensor& w) {
    RowMat wt(c_out * kk, c_in);
    for (std::size_t co = 0; co < c_out; ++co)
      for (std::size_t ci = 0; ci < c_in; ++ci)
        for (std::size_t d = 0; d < kk; ++d) wt(co * kk + d, ci) = w[(co * c_in + ci) * kk + d];
    return wt;
  };
  Tensor out(Shape{c_out, geo.height, geo.width});
  {
    auto& cols = scratch(0, c_out * kk * plane);
    MatMap C(cols.data(), c_out * kk, plane);
    C.noalias() = permute(w) * ConstMatMap(x.data(), c_in, plane);
    detail::col2im(cols.data(), geo, out.data());
    const std::size_t fine = geo.height * geo.width;
    for (std::size_t co = 0; co < c_out; ++co) {
      const double b = bias.value()[co];
      double* dst = out.data() + co * fine;
      for (std::size_t i = 0; i < fine; ++i) dst[i] += b;
    }
  }
  return g.record(std::move(out), {input, kernels, bias}, [=](Graph& g, const Tensor& dy) {
    const bool need_x = g.requires_grad(input);
    const bool need_w = g.requires_grad(kernels);
    if (need_x || need_w) {
      auto& dcols = scratch(1, c_out * kk * plane);
      detail::im2col(dy.data(), geo, dcols.data());
      ConstMatMap dC(dcols.data(), c_out * kk, plane);
      if (Tensor* dx = g.grad_sink(input)) {
        MatMap(dx->data(), c_in, plane).noalias() += permute(g.value(kernels)).transpose() * dC;
      }
      if (Tensor* dw = g.grad_sink(kernels)) {
        RowMat dwt = dC * ConstMatMap(g.value(input).data(), c_in, plane).transpose();
        for (std::size_t co = 0; co < c_out; ++co)
          for (std::size_t ci = 0; ci < c_in; ++ci)
            for (std::size_t d = 0; d < kk; ++d) (*dw)[(co * c_in + ci) * kk + d] += dwt(co * kk + d, ci);
      }
    }
    if (Tensor* db = g.grad_sink(bias)) {
      const std::size_t fine = geo.height * geo.width;
      for (std::size_t co = 0; co < c_out; ++co) {
        double s = 0.0;
        const double* src = dy.data() + co * fine;
        for (std::size_t i = 0; i < fine; ++i) s += src[i];
        (*db)[co] += s;
      }
    }
  });
}

namespace {

// Largest double below 1 and smallest normal above 0; keeps the sigmoid range open.
constexpr double kSigmoidHigh = 1.0 - std::numeric_limits<double>::epsilon() / 2;
constexpr double kSigmoidLow = std::numeric_limits<double>::min();

double sigmoid_value(double v) {
  const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return std::clamp(s, kSigmoidLow, kSigmoidHigh);
}

}  // namespace

Var activation(Var input, Activation kind) {
  const Tensor& x = input.value();
  Tensor out = Tensor::zeros_like(x);
  if (kind == Activation::elu) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= 0.0 ? x[i] : std::expm1(x[i]);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid_value(x[i]);
  }
  Graph& g = input.graph();
  return g.record(std::move(out), {input}, [input, kind](Graph& g, const Tensor& dy) {
    Tensor* dx = g.grad_sink(input);
    if (!dx) return;
    const Tensor& x = g.value(input);
    if (kind == Activation::elu) {
      for (std::size_t i = 0; i < x.size(); ++i) (*dx)[i] += dy[i] * (x[i] >= 0.0 ? 1.0 : std::exp(x[i]));
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = sigmoid_value(x[i]);
        (*dx)[i] += dy[i] * s * (1.0 - s);
      }
    }
  });
}

Var batch_norm(Var batch, Var gamma, Var beta, BatchNormMode mode, RunningStats& stats) {
  require_rank(batch, 2, "batch_norm");
  const Tensor& x = batch.value();
  const std::size_t b = x.dim(0);
  const std::size_t f = x.dim(1);
  if (b < 1) throw ShapeError("batch_norm: empty batch");
  if (gamma.value().shape() != Shape{f} || beta.value().shape() != Shape{f}) {
    throw ShapeError("batch_norm: gamma/beta must have one entry per feature");
  }
  Tensor mean(Shape{f});
  Tensor inv_std(Shape{f});
  if (mode == BatchNormMode::train) {
    Tensor var(Shape{f});
    for (std::size_t j = 0; j < f; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < b; ++i) m += x[i * f + j];
      m /= static_cast<double>(b);
      double v = 0.0;
      for (std::size_t i = 0; i < b; ++i) v += (x[i * f + j] - m) * (x[i * f + j] - m);
      v /= static_cast<double>(b);
      mean[j] = m;
      var[j] = v;
      inv_std[j] = 1.0 / std::sqrt(v + kBatchNormEpsilon);
    }
    const double unbias = b > 1 ? static_cast<double>(b) / static_cast<double>(b - 1) : 1.0;
    if (!stats.initialized) {
      stats.mean = mean;
      stats.variance = var * unbias;
      stats.initialized = true;
    } else {
      for (std::size_t j = 0; j < f; ++j) {
        stats.mean[j] = (1.0 - stats.momentum) * stats.mean[j] + stats.momentum * mean[j];
        stats.variance[j] = (1.0 - stats.momentum) * stats.variance[j] + stats.momentum * var[j] * unbias;
      }
    }
  } else {
    if (!stats.initialized) throw ArgumentError("batch_norm: eval mode requires populated running statistics");
    if (stats.mean.shape() != Shape{f}) throw ShapeError("batch_norm: running statistics have wrong size");
    for (std::size_t j = 0; j < f; ++j) {
      mean[j] = stats.mean[j];
      inv_std[j] = 1.0 / std::sqrt(stats.variance[j] + kBatchNormEpsilon);
    }
  }
  Tensor normalized(Shape{b, f});
  Tensor out(Shape{b, f});
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      const double xh = (x[i * f + j] - mean[j]) * inv_std[j];
      normalized[i * f + j] = xh;
      out[i * f + j] = gamma.value()[j] * xh + beta.value()[j];
    }
  }
  Graph& g = batch.graph();
  return g.record(std::move(out), {batch, gamma, beta},
                  [=, normalized = std::move(normalized)](Graph& g, const Tensor& dy) {
                    if (Tensor* dg = g.grad_sink(gamma)) {
                      for (std::size_t i = 0; i < b; ++i)
                        for (std::size_t j = 0; j < f; ++j) (*dg)[j] += dy[i * f + j] * normalized[i * f + j];
                    }
                    if (Tensor* dbeta = g.grad_sink(beta)) {
                      for (std::size_t i = 0; i < b; ++i)
                        for (std::size_t j = 0; j < f; ++j) (*dbeta)[j] += dy[i * f + j];
                    }
                    Tensor* dx = g.grad_sink(batch);
                    if (!dx) return;
                    const Tensor& gm = g.value(gamma);
                    if (mode == BatchNormMode::eval) {
                      for (std::size_t i = 0; i < b; ++i)
                        for (std::size_t j = 0; j < f; ++j) (*dx)[i * f + j] += dy[i * f + j] * gm[j] * inv_std[j];
                      return;
                    }
                    const double n = static_cast<double>(b);
                    for (std::size_t j = 0; j < f; ++j) {
                      double sum_d = 0.0;
                      double sum_dx = 0.0;
                      for (std::size_t i = 0; i < b; ++i) {
                        const double d = dy[i * f + j] * gm[j];
                        sum_d += d;
                        sum_dx += d * normalized[i * f + j];
                      }
                      for (std::size_t i = 0; i < b; ++i) {
                        const double d = dy[i * f + j] * gm[j];
                        (*dx)[i * f + j] += inv_std[j] / n * (n * d - sum_d - normalized[i * f + j] * sum_dx);
                      }
                    }
                  });
}

Var resample2x(Var input, Resample direction, bool scale_values) {
  Graph& g = input.graph();
  const Tensor& x = input.value();
  if (direction == Resample::down) {
    Tensor out = downsample2x(x);
    return g.record(std::move(out), {input}, [input](Graph& g, const Tensor& dy) {
      Tensor* dx = g.grad_sink(input);
      if (!dx) return;
      const std::size_t c = dy.dim(0), h = dy.dim(1), w = dy.dim(2);
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            const double d = 0.25 * dy.at(ch, y, x);
            dx->at(ch, 2 * y, 2 * x) += d;
            dx->at(ch, 2 * y, 2 * x + 1) += d;
            dx->at(ch, 2 * y + 1, 2 * x) += d;
            dx->at(ch, 2 * y + 1, 2 * x + 1) += d;
          }
    });
  }
  Tensor out = upsample2x(x, scale_values);
  const double factor = scale_values ? 2.0 : 1.0;
  return g.record(std::move(out), {input}, [input, factor](Graph& g, const Tensor& dy) {
    Tensor* dx = g.grad_sink(input);
    if (!dx) return;
    const std::size_t c = dx->dim(0), h = dx->dim(1), w = dx->dim(2);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < 2 * h; ++y) {
        const Taps ty = upsample_taps(y, h);
        for (std::size_t x = 0; x < 2 * w; ++x) {
          const Taps tx = upsample_taps(x, w);
          const double d = factor * dy.at(ch, y, x);
          dx->at(ch, ty.i0, tx.i0) += d * ty.w0 * tx.w0;
          dx->at(ch, ty.i0, tx.i1) += d * ty.w0 * tx.w1;
          dx->at(ch, ty.i1, tx.i0) += d * ty.w1 * tx.w0;
          dx->at(ch, ty.i1, tx.i1) += d * ty.w1 * tx.w1;
        }
      }
  });
}

namespace {

// Bilinear sample location after clamping to the image.
struct Sample {
  std::size_t x0, x1, y0, y1;
  double fx, fy;
  bool inside_x, inside_y;  // false where clamping flattened the coordinate
};

Sample locate(double sx, double sy, std::size_t w, std::size_t h) {
  Sample s{};
  const double max_x = static_cast<double>(w - 1);
  const double max_y = static_cast<double>(h - 1);
  s.inside_x = sx > 0.0 && sx < max_x;
  s.inside_y = sy > 0.0 && sy < max_y;
  sx = std::clamp(sx, 0.0, max_x);
  sy = std::clamp(sy, 0.0, max_y);
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  s.x0 = static_cast<std::size_t>(fx0);
  s.y0 = static_cast<std::size_t>(fy0);
  s.x1 = std::min(s.x0 + 1, w - 1);
  s.y1 = std::min(s.y0 + 1, h - 1);
  s.fx = sx - fx0;
  s.fy = sy - fy0;
  return s;
}

void check_warp_shapes(const Tensor& image, const Tensor& motion) {
  if (image.rank() != 3 || motion.rank() != 3 || motion.dim(0) != 2 || motion.dim(1) != image.dim(1) ||
      motion.dim(2) != image.dim(2)) {
    throw ShapeError("warp: image " + to_string(image.shape()) + " and motion " + to_string(motion.shape()) +
                     " are incompatible");
  }
}

Tensor sample_image(const Tensor& image, const Tensor& motion, double direction) {
  check_warp_shapes(image, motion);
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out(image.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const Sample s = locate(static_cast<double>(x) + direction * motion.at(0, y, x),
                              static_cast<double>(y) + direction * motion.at(1, y, x), w, h);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double a = image.at(ch, s.y0, s.x0);
        const double b = image.at(ch, s.y0, s.x1);
        const double cc = image.at(ch, s.y1, s.x0);
        const double d = image.at(ch, s.y1, s.x1);
        const double top = a + s.fx * (b - a);
        const double bottom = cc + s.fx * (d - cc);
        out.at(ch, y, x) = top + s.fy * (bottom - top);
      }
    }
  return out;
}

}  // namespace

Var bilinear_warp(Var image, Var motion) {
  Tensor out = sample_image(image.value(), motion.value(), 1.0);
  Graph& g = image.graph();
  return g.record(std::move(out), {image, motion}, [image, motion](Graph& g, const Tensor& dy) {
    const Tensor& img = g.value(image);
    const Tensor& mot = g.value(motion);
    Tensor* dimg = g.grad_sink(image);
    Tensor* dmot = g.grad_sink(motion);
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const Sample s = locate(static_cast<double>(x) + mot.at(0, y, x), static_cast<double>(y) + mot.at(1, y, x),
                                w, h);
        double gx = 0.0;
        double gy = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double d = dy.at(ch, y, x);
          if (dimg) {
            dimg->at(ch, s.y0, s.x0) += d * (1.0 - s.fx) * (1.0 - s.fy);
            dimg->at(ch, s.y0, s.x1) += d * s.fx * (1.0 - s.fy);
            dimg->at(ch, s.y1, s.x0) += d * (1.0 - s.fx) * s.fy;
            dimg->at(ch, s.y1, s.x1) += d * s.fx * s.fy;
          }
          if (dmot) {
            const double a = img.at(ch, s.y0, s.x0);
            const double b = img.at(ch, s.y0, s.x1);
            const double cc = img.at(ch, s.y1, s.x0);
            const double dd = img.at(ch, s.y1, s.x1);
            gx += d * ((1.0 - s.fy) * (b - a) + s.fy * (dd - cc));
            gy += d * ((cc + s.fx * (dd - cc)) - (a + s.fx * (b - a)));
          }
        }
        if (dmot) {
          if (s.inside_x) dmot->at(0, y, x) += gx;
          if (s.inside_y) dmot->at(1, y, x) += gy;
        }
      }
  });
}

}  // namespace dbsgen::ops

namespace dbsgen {

Tensor warp_image(const Tensor& image, const Tensor& motion) { return ops::sample_image(image, motion, 1.0); }

Tensor inverse_warp(const Tensor& image, const Tensor& motion) { return ops::sample_image(image, motion, -1.0); }

}  // namespace dbsgen
