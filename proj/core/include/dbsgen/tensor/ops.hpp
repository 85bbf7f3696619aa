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

#include "dbsgen/tensor/graph.hpp"

/// Differentiable operations on graph variables.
///
/// Image-like tensors are laid out (channel, row, column). Motion fields have
/// two channels: channel 0 is the horizontal (column) displacement and
/// channel 1 the vertical (row) displacement, both in pixels of the field's
/// own resolution.
namespace dbsgen::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double factor);
Var sum(Var a);
Var sum_squares(Var a);
/// Euclidean norm of the flattened tensor. The gradient at 0 is taken as 0.
Var l2_norm(Var a);
/// Sum of absolute values.
Var l1_norm(Var a);
/// Inner product with a constant tensor of the same shape.
Var dot(Var a, const Tensor& weights);

/// Slice `index` along the first axis; the result drops that axis.
Var select(Var a, std::size_t index);
/// Stacks rows `indices` of a rank-2 tensor into a new rank-2 tensor.
Var gather_rows(Var a, const std::vector<std::size_t>& indices);
Var reshape(Var a, Shape shape);

/// y = W x + b. `input` is a vector [n] or a batch [b x n]; `weights` is [m x n].
Var linear(Var input, Var weights, Var bias);

enum class ConvMode { standard, transposed };

/// 2-D cross-correlation with zero "same" padding (k/2) on a [c x h x w] input.
///
/// Kernels are [c_out x c_in x k x k] in both modes. Standard mode with stride
/// s produces [c_out x h/s x w/s]; transposed mode is its adjoint and produces
/// [c_out x h*s x w*s].
Var conv2d(Var input, Var kernels, Var bias, ConvMode mode = ConvMode::standard, std::size_t stride = 1);

enum class Activation { elu, sigmoid };

Var activation(Var input, Activation kind);
inline Var elu(Var input) { return activation(input, Activation::elu); }
inline Var sigmoid(Var input) { return activation(input, Activation::sigmoid); }

enum class BatchNormMode { train, eval };

/// Running mean / variance of a batch-norm layer.
struct RunningStats {
  Tensor mean;
  Tensor variance;
  bool initialized = false;
  double momentum = 0.1;
};

inline constexpr double kBatchNormEpsilon = 1e-5;

/// Normalizes a [b x f] batch per feature, then applies gamma/beta.
///
/// Train mode uses biased batch statistics and folds them into `stats` by an
/// exponential moving average (unbiased variance when b > 1). Eval mode
/// uses `stats` and throws ArgumentError if they were never populated.
Var batch_norm(Var batch, Var gamma, Var beta, BatchNormMode mode, RunningStats& stats);

enum class Resample { down, up };

/// 2x2 average pooling (down) or bilinear 2x upsampling with half-pixel
/// alignment and edge clamping (up). With `scale_values`, upsampled values
/// are doubled so that displacements stay in pixels of the finer grid.
Var resample2x(Var input, Resample direction, bool scale_values = false);

/// Backward bilinear sampling: out(x) = image(x + motion(x)), sample
/// coordinates clamped to the image border.
Var bilinear_warp(Var image, Var motion);

}  // namespace dbsgen::ops
