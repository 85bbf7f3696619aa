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

#include "dbsgen/tensor/tensor.hpp"

namespace dbsgen {

/// Bilinear sample of a [c x h x w] image at out(x) = image(x + motion(x)).
Tensor warp_image(const Tensor& image, const Tensor& motion);

/// Samples at x - motion(x); undoes warp_image for locally constant fields.
Tensor inverse_warp(const Tensor& image, const Tensor& motion);

/// Plain (non-differentiable) versions of the pyramid resampling.
Tensor downsample2x(const Tensor& image);
Tensor upsample2x(const Tensor& image, bool scale_values = false);

}  // namespace dbsgen
