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

#include <cstdint>
#include <vector>

#include "dbsgen/tensor/graph.hpp"

namespace dbsgen {

struct AdamOptions {
  double lr = 0.006;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed set of parameters.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  /// Applies one update from each parameter's current `grad`.
  void step();
  void zero_grad();

  std::int64_t steps() const noexcept { return step_; }
  const AdamOptions& options() const noexcept { return options_; }

 private:
  struct Moments {
    Tensor first;
    Tensor second;
  };

  std::vector<Parameter*> params_;
  std::vector<Moments> moments_;
  AdamOptions options_;
  std::int64_t step_ = 0;
};

}  // namespace dbsgen
