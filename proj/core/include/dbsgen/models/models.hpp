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

#include "dbsgen/tensor/graph.hpp"
#include "dbsgen/tensor/ops.hpp"

namespace dbsgen::models {

inline constexpr std::size_t kMotionFilters = 32;
inline constexpr std::size_t kMotionKernel = 7;
inline constexpr std::size_t kBackgroundLatent = 3;
inline constexpr std::array<std::size_t, 3> kBackgroundHidden{12, 24, 43};

struct ConvLayer {
  Parameter kernels;
  Parameter bias;
};

struct DenseLayer {
  Parameter weights;
  Parameter bias;
};

struct NormLayer {
  Parameter gamma;
  Parameter beta;
  ops::RunningStats stats;
};

/// Motion generator. From a 1-channel latent at H/8: two 7x7 convolutions,
/// then three (transposed convolution, 2-channel head) stages producing the
/// motion maps at H/4, H/2 and H.
struct MotionNetParams {
  ConvLayer conv1;
  ConvLayer conv2;
  ConvLayer up_quarter;
  ConvLayer head_quarter;
  ConvLayer up_half;
  ConvLayer head_half;
  ConvLayer up_full;
  ConvLayer head_full;

  std::vector<Parameter*> parameters();
};

/// Background generator: latent(3) -> 12 -> 24 -> 43 -> 3*H*W with batch norm
/// and ELU on the hidden layers and a sigmoid on the output.
struct BackgroundNetParams {
  std::array<DenseLayer, 3> hidden;
  std::array<NormLayer, 3> norms;
  DenseLayer output;
  std::size_t height = 0;
  std::size_t width = 0;

  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;
};

/// Everything the optimizer owns for one sequence.
struct ModelState {
  MotionNetParams motion;
  BackgroundNetParams background;
  Parameter motion_latents;      // N x H/8 x W/8
  Parameter background_latents;  // N x 3
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::vector<Parameter*> network_parameters();
  std::vector<Parameter*> all_parameters();
};

/// Deterministic initialization. Motion heads start at zero so the initial
/// motion maps are exactly zero; other kernels and dense weights are uniform
/// in +-1/sqrt(fan_in); biases zero; latents N(0, 0.01^2).
/// Throws ShapeError unless H and W are positive multiples of 8.
ModelState init_parameters(std::uint64_t seed, std::size_t frames, std::size_t height, std::size_t width);

/// Motion maps of one frame, coarse to fine.
struct MotionPyramid {
  Var quarter;  // 2 x H/4 x W/4
  Var half;     // 2 x H/2 x W/2
  Var full;     // 2 x H x W
};

struct ConvVars {
  Var kernels;
  Var bias;
};

struct MotionNetVars {
  ConvVars conv1, conv2, up_quarter, head_quarter, up_half, head_half, up_full, head_full;
};

struct BackgroundNetVars {
  std::array<ConvVars, 3> hidden;  // weights, bias
  std::array<ConvVars, 3> norms;   // gamma, beta
  ConvVars output;
};

/// Binds the parameters as graph leaves; `trainable` false binds constants.
MotionNetVars bind(Graph& graph, MotionNetParams& params, bool trainable = true);
BackgroundNetVars bind(Graph& graph, BackgroundNetParams& params, bool trainable = true);

/// Frame `frame` of an [N x H/8 x W/8] latent tensor as [1 x H/8 x W/8].
Var latent_slice(Var motion_latents, std::size_t frame);

/// Motion pyramid for a [1 x H/8 x W/8] latent slice. Each finer map is the
/// upsampled (values doubled) coarser map plus that resolution's head output.
MotionPyramid motion_forward(Var latent_slice, const MotionNetVars& net);

/// Backgrounds for a [b x 3] latent batch, returned as [b x 3*H*W] with
/// every value in (0, 1). Train mode updates the batch-norm running stats.
Var background_forward(Var latents, const BackgroundNetVars& net, BackgroundNetParams& params,
                       ops::BatchNormMode mode);

/// Reshapes row `row` of a background batch to [3 x H x W].
Var background_image(Var batch, std::size_t row, std::size_t height, std::size_t width);

}  // namespace dbsgen::models
