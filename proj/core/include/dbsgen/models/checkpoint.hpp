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

#include <filesystem>

#include "dbsgen/models/models.hpp"

namespace dbsgen::models {

/// Writes every parameter and batch-norm running statistic of `state`.
/// Layout is described in docs/checkpoint.md.
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);

/// Reads a checkpoint written by save_checkpoint. Throws DataError on a
/// malformed file or when an expected array is missing.
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace dbsgen::models
