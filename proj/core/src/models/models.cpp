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

#include "dbsgen/models/models.hpp"

#include <cmath>
#include <random>
#include <string>

namespace dbsgen::models {

namespace {

Tensor uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

ConvLayer conv_layer(const std::string& name, std::size_t c_out, std::size_t c_in, std::mt19937_64& rng,
                     bool zero = false) {
  const std::size_t k = kMotionKernel;
  Shape shape{c_out, c_in, k, k};
  Tensor kernels = zero ? Tensor(shape) : uniform(shape, c_in * k * k, rng);
  return {Parameter(name + ".kernels", std::move(kernels)), Parameter(name + ".bias", Tensor(Shape{c_out}), false)};
}

DenseLayer dense_layer(const std::string& name, std::size_t out, std::size_t in, std::mt19937_64& rng) {
  return {Parameter(name + ".weights", uniform(Shape{out, in}, in, rng)),
          Parameter(name + ".bias", Tensor(Shape{out}), false)};
}

ConvVars bind_pair(Graph& g, Parameter& a, Parameter& b, bool trainable) {
  if (trainable) return {g.parameter(a), g.parameter(b)};
  return {g.constant(a.value), g.constant(b.value)};
}

Var conv(Var x, const ConvVars& layer, ops::ConvMode mode = ops::ConvMode::standard) {
  return ops::conv2d(x, layer.kernels, layer.bias, mode, mode == ops::ConvMode::transposed ? 2 : 1);
}

}  // namespace

std::vector<Parameter*> MotionNetParams::parameters() {
  std::vector<Parameter*> out;
  for (ConvLayer* l : {&conv1, &conv2, &up_quarter, &head_quarter, &up_half, &head_half, &up_full, &head_full}) {
    out.push_back(&l->kernels);
    out.push_back(&l->bias);
  }
  return out;
}

std::vector<Parameter*> BackgroundNetParams::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    out.push_back(&hidden[i].weights);
    out.push_back(&hidden[i].bias);
    out.push_back(&norms[i].gamma);
    out.push_back(&norms[i].beta);
  }
  out.push_back(&output.weights);
  out.push_back(&output.bias);
  return out;
}

std::size_t BackgroundNetParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    n += hidden[i].weights.value.size() + hidden[i].bias.value.size();
    n += norms[i].gamma.value.size() + norms[i].beta.value.size();
  }
  return n + output.weights.value.size() + output.bias.value.size();
}

std::vector<Parameter*> ModelState::network_parameters() {
  std::vector<Parameter*> out = motion.parameters();
  for (Parameter* p : background.parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> ModelState::all_parameters() {
  std::vector<Parameter*> out = network_parameters();
  out.push_back(&motion_latents);
  out.push_back(&background_latents);
  return out;
}

ModelState init_parameters(std::uint64_t seed, std::size_t frames, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || height % 8 != 0 || width % 8 != 0) {
    throw ShapeError("frame size " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not a positive multiple of 8");
  }
  if (frames == 0) throw ShapeError("cannot initialize a model for zero frames");
  std::mt19937_64 rng(seed);
  ModelState s;
  s.frames = frames;
  s.height = height;
  s.width = width;

  const std::size_t f = kMotionFilters;
  s.motion.conv1 = conv_layer("motion.conv1", f, 1, rng);
  s.motion.conv2 = conv_layer("motion.conv2", f, f, rng);
  s.motion.up_quarter = conv_layer("motion.up_quarter", f, f, rng);
  s.motion.head_quarter = conv_layer("motion.head_quarter", 2, f, rng, true);
  s.motion.up_half = conv_layer("motion.up_half", f, f, rng);
  s.motion.head_half = conv_layer("motion.head_half", 2, f, rng, true);
  s.motion.up_full = conv_layer("motion.up_full", f, f, rng);
  s.motion.head_full = conv_layer("motion.head_full", 2, f, rng, true);

  std::size_t in = kBackgroundLatent;
  for (std::size_t i = 0; i < kBackgroundHidden.size(); ++i) {
    const std::size_t out = kBackgroundHidden[i];
    const std::string name = "background.fc" + std::to_string(i + 1);
    s.background.hidden[i] = dense_layer(name, out, in, rng);
    s.background.norms[i].gamma = Parameter("background.bn" + std::to_string(i + 1) + ".gamma", Tensor(Shape{out}, 1.0), false);
    s.background.norms[i].beta = Parameter("background.bn" + std::to_string(i + 1) + ".beta", Tensor(Shape{out}), false);
    in = out;
  }
  s.background.output = dense_layer("background.out", 3 * height * width, in, rng);
  s.background.height = height;
  s.background.width = width;

  std::normal_distribution<double> latent(0.0, 0.01);
  Tensor motion_latents(Shape{frames, height / 8, width / 8});
  for (double& v : motion_latents.values()) v = latent(rng);
  Tensor background_latents(Shape{frames, kBackgroundLatent});
  for (double& v : background_latents.values()) v = latent(rng);
  s.motion_latents = Parameter("latents.motion", std::move(motion_latents), false);
  s.background_latents = Parameter("latents.background", std::move(background_latents), false);
  return s;
}

MotionNetVars bind(Graph& g, MotionNetParams& p, bool trainable) {
  auto b = [&](ConvLayer& l) { return bind_pair(g, l.kernels, l.bias, trainable); };
  return {b(p.conv1),   b(p.conv2),     b(p.up_quarter), b(p.head_quarter),
          b(p.up_half), b(p.head_half), b(p.up_full),    b(p.head_full)};
}

BackgroundNetVars bind(Graph& g, BackgroundNetParams& p, bool trainable) {
  BackgroundNetVars v;
  for (std::size_t i = 0; i < p.hidden.size(); ++i) {
    v.hidden[i] = bind_pair(g, p.hidden[i].weights, p.hidden[i].bias, trainable);
    v.norms[i] = bind_pair(g, p.norms[i].gamma, p.norms[i].beta, trainable);
  }
  v.output = bind_pair(g, p.output.weights, p.output.bias, trainable);
  return v;
}

Var latent_slice(Var motion_latents, std::size_t frame) {
  const Shape& shape = motion_latents.shape();
  if (shape.size() != 3) throw ShapeError("motion latents must be [N x H/8 x W/8], got " + to_string(shape));
  return ops::reshape(ops::select(motion_latents, frame), Shape{1, shape[1], shape[2]});
}

MotionPyramid motion_forward(Var latent_slice, const MotionNetVars& net) {
  const Tensor& z = latent_slice.value();
  if (z.rank() != 3 || z.dim(0) != 1) {
    throw ShapeError("motion latent slice must be [1 x H/8 x W/8], got " + to_string(z.shape()));
  }
  using ops::ConvMode;
  Var x = ops::elu(conv(latent_slice, net.conv1));
  x = ops::elu(conv(x, net.conv2));

  Var feat_quarter = ops::elu(conv(x, net.up_quarter, ConvMode::transposed));
  Var quarter = conv(feat_quarter, net.head_quarter);

  Var feat_half = ops::elu(conv(feat_quarter, net.up_half, ConvMode::transposed));
  Var half = ops::add(ops::resample2x(quarter, ops::Resample::up, true), conv(feat_half, net.head_half));

  Var feat_full = ops::elu(conv(feat_half, net.up_full, ConvMode::transposed));
  Var full = ops::add(ops::resample2x(half, ops::Resample::up, true), conv(feat_full, net.head_full));
  return {quarter, half, full};
}

Var background_forward(Var latents, const BackgroundNetVars& net, BackgroundNetParams& params,
                       ops::BatchNormMode mode) {
  const Tensor& z = latents.value();
  if (z.rank() != 2 || z.dim(1) != kBackgroundLatent) {
    throw ShapeError("background latents must be [b x 3], got " + to_string(z.shape()));
  }
  if (params.output.weights.value.dim(0) != 3 * params.height * params.width) {
    throw ShapeError("background output layer does not match the frame size");
  }
  Var x = latents;
  for (std::size_t i = 0; i < net.hidden.size(); ++i) {
    x = ops::linear(x, net.hidden[i].kernels, net.hidden[i].bias);
    x = ops::batch_norm(x, net.norms[i].kernels, net.norms[i].bias, mode, params.norms[i].stats);
    x = ops::elu(x);
  }
  return ops::sigmoid(ops::linear(x, net.output.kernels, net.output.bias));
}

Var background_image(Var batch, std::size_t row, std::size_t height, std::size_t width) {
  return ops::reshape(ops::select(batch, row), Shape{3, height, width});
}

}  // namespace dbsgen::models
