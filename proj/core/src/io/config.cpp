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

#include "dbsgen/io/config.hpp"

#include <cstdint>
#include <cstdio>

#include "json_fields.hpp"

namespace dbsgen::io {

namespace {

using pipeline::FixedImageStrategy;

void validate(const RunConfig& c) {
  c.training.validate();
  const auto& s = c.segmentation;
  if (!(s.initial_scale > 0.0)) throw ConfigError("initial_scale must be positive");
  if (s.betas.beta1 < 0.0 || s.betas.beta2 < 0.0 || s.betas.beta3 < 0.0) throw ConfigError("betas must be non-negative");
  for (int k : {s.median_k, s.closing_k}) {
    if (k < 1 || k % 2 == 0) throw ConfigError("kernel sizes must be odd and positive, got " + std::to_string(k));
  }
  const auto& f = c.training.fixed_image;
  if (f.kind == FixedImageStrategy::Kind::temporal_median && f.range_end != 0 && f.range_begin >= f.range_end) {
    throw ConfigError("median_begin must be below median_end");
  }
}

}  // namespace

RunConfig parse_config(const std::string& json) {
  using namespace detail;
  RunConfig c;
  auto& t = c.training;
  auto& s = c.segmentation;
  FieldTable table;
  table.add("lambda", number(t.lambda));
  table.add("alpha", number(t.alpha));
  table.add("lr", number(t.lr));
  table.add("epochs", number(t.epochs));
  table.add("batch_frames", number(t.batch_frames));
  table.add("weight_decay", number(t.weight_decay));
  table.add("motion_reg_weight", number(t.motion_reg_weight));
  table.add("recons_updates_motion", boolean(t.recons_updates_motion));
  table.add("seed", number(t.seed));
  table.add("use_motion", boolean(t.use_motion));
  table.add("threads", number(t.threads));
  table.add("fixed_image", [&](const Json& v) {
    const std::string kind = v.get<std::string>();
    if (kind == "temporal_median") {
      t.fixed_image.kind = FixedImageStrategy::Kind::temporal_median;
    } else if (kind == "frame_index") {
      t.fixed_image.kind = FixedImageStrategy::Kind::frame_index;
    } else {
      throw ConfigError("unknown fixed image strategy \"" + kind + "\"");
    }
  });
  table.add("fixed_frame", number(t.fixed_image.frame));
  table.add("median_begin", number(t.fixed_image.range_begin));
  table.add("median_end", number(t.fixed_image.range_end));
  table.add("initial_scale", number(s.initial_scale));
  table.add("beta1", number(s.betas.beta1));
  table.add("beta2", number(s.betas.beta2));
  table.add("beta3", number(s.betas.beta3));
  table.add("postprocess", boolean(s.postprocess));
  table.add("median_kernel", number(s.median_k));
  table.add("closing_kernel", number(s.closing_k));
  table.apply(parse_json(json, "config"), "config");
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(detail::read_text(path)); }

std::string config_json(const RunConfig& c) {
  const auto& t = c.training;
  const auto& s = c.segmentation;
  detail::Json j;
  j["lambda"] = t.lambda;
  j["alpha"] = t.alpha;
  j["lr"] = t.lr;
  j["epochs"] = t.epochs;
  j["batch_frames"] = t.batch_frames;
  j["weight_decay"] = t.weight_decay;
  j["motion_reg_weight"] = t.motion_reg_weight;
  j["recons_updates_motion"] = t.recons_updates_motion;
  j["seed"] = t.seed;
  j["use_motion"] = t.use_motion;
  j["threads"] = t.threads;
  j["fixed_image"] =
      t.fixed_image.kind == FixedImageStrategy::Kind::temporal_median ? "temporal_median" : "frame_index";
  j["fixed_frame"] = t.fixed_image.frame;
  j["median_begin"] = t.fixed_image.range_begin;
  j["median_end"] = t.fixed_image.range_end;
  j["initial_scale"] = s.initial_scale;
  j["beta1"] = s.betas.beta1;
  j["beta2"] = s.betas.beta2;
  j["beta3"] = s.betas.beta3;
  j["postprocess"] = s.postprocess;
  j["median_kernel"] = s.median_k;
  j["closing_kernel"] = s.closing_k;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dbsgen::io
