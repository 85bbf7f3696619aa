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

#include "dbsgen/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dbsgen/error.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint data is stored little-endian");

namespace dbsgen::models {

namespace {

constexpr const char* kMagic = "DBSGEN-CHECKPOINT 1";

// Visits every stored array in a fixed order. Works for const and mutable
// states so save and load share the naming.
template <typename State, typename Fn>
void visit_arrays(State& s, Fn&& fn) {
  auto param = [&](auto& p) { fn(p.name, p.value); };
  for (auto* layer : {&s.motion.conv1, &s.motion.conv2, &s.motion.up_quarter, &s.motion.head_quarter,
                      &s.motion.up_half, &s.motion.head_half, &s.motion.up_full, &s.motion.head_full}) {
    param(layer->kernels);
    param(layer->bias);
  }
  for (std::size_t i = 0; i < s.background.hidden.size(); ++i) {
    param(s.background.hidden[i].weights);
    param(s.background.hidden[i].bias);
    param(s.background.norms[i].gamma);
    param(s.background.norms[i].beta);
    const std::string bn = "background.bn" + std::to_string(i + 1);
    fn(bn + ".running_mean", s.background.norms[i].stats.mean);
    fn(bn + ".running_variance", s.background.norms[i].stats.variance);
  }
  param(s.background.output.weights);
  param(s.background.output.bias);
  param(s.motion_latents);
  param(s.background_latents);
}

struct Entry {
  Shape shape;
  std::size_t offset = 0;
};

}  // namespace

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ostringstream header;
  std::vector<std::pair<std::string, const Tensor*>> arrays;
  visit_arrays(state, [&](const std::string& name, const Tensor& t) { arrays.emplace_back(name, &t); });

  header << kMagic << '\n';
  header << "frames " << state.frames << " height " << state.height << " width " << state.width << '\n';
  header << "arrays " << arrays.size() << '\n';
  std::size_t offset = 0;
  for (const auto& [name, t] : arrays) {
    // Never-populated running statistics are stored as empty rank-1 arrays.
    const Shape shape = t->size() == 0 ? Shape{0} : t->shape();
    header << name << ' ' << shape.size();
    for (std::size_t d : shape) header << ' ' << d;
    header << ' ' << offset << '\n';
    offset += t->size() * sizeof(double);
  }
  header << "END\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  const std::string text = header.str();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : arrays) {
    out.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  auto fail = [&](const std::string& what) -> DataError {
    return DataError("malformed checkpoint " + path.string() + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("bad magic line");
  std::size_t frames = 0, height = 0, width = 0, count = 0;
  {
    std::getline(in, line);
    std::istringstream ss(line);
    std::string k1, k2, k3;
    if (!(ss >> k1 >> frames >> k2 >> height >> k3 >> width) || k1 != "frames" || k2 != "height" || k3 != "width") {
      throw fail("bad size line");
    }
  }
  {
    std::getline(in, line);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key >> count) || key != "arrays") throw fail("bad array count");
  }
  std::map<std::string, Entry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw fail("truncated header");
    std::istringstream ss(line);
    std::string name;
    std::size_t rank = 0;
    Entry e;
    if (!(ss >> name >> rank) || rank > 8) throw fail("bad array line '" + line + "'");
    e.shape.resize(rank);
    for (std::size_t& d : e.shape) {
      if (!(ss >> d)) throw fail("bad array line '" + line + "'");
    }
    if (!(ss >> e.offset)) throw fail("bad array line '" + line + "'");
    entries[name] = std::move(e);
  }
  if (!std::getline(in, line) || line != "END") throw fail("missing END");
  const std::streamoff data_start = in.tellg();
  in.seekg(0, std::ios::end);
  const std::streamoff data_size = in.tellg() - data_start;

  ModelState state;
  try {
    state = init_parameters(0, frames, height, width);
  } catch (const ShapeError& e) {
    throw fail(e.what());
  }
  visit_arrays(state, [&](const std::string& name, Tensor& t) {
    auto it = entries.find(name);
    if (it == entries.end()) throw fail("missing array " + name);
    const Entry& e = it->second;
    const std::size_t n = element_count(e.shape);
    const bool stats = name.find(".running_") != std::string::npos;
    if (!stats && e.shape != t.shape()) {
      throw fail("array " + name + " has shape " + to_string(e.shape) + ", expected " + to_string(t.shape()));
    }
    if (e.offset + n * sizeof(double) > static_cast<std::size_t>(data_size)) throw fail("array " + name + " out of range");
    if (n == 0) {
      t = Tensor();
      return;
    }
    Tensor loaded(e.shape);
    in.seekg(data_start + static_cast<std::streamoff>(e.offset));
    in.read(reinterpret_cast<char*>(loaded.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw fail("short read for " + name);
    t = std::move(loaded);
  });
  for (auto& norm : state.background.norms) {
    if (norm.stats.mean.size() != norm.stats.variance.size()) throw fail("running statistics disagree in size");
    norm.stats.initialized = norm.stats.mean.size() > 0;
  }
  for (Parameter* p : state.all_parameters()) p->grad = Tensor::zeros_like(p->value);
  return state;
}

}  // namespace dbsgen::models
