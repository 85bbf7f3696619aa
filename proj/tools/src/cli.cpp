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

#include "dbsgen/cli/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dbsgen/error.hpp"
#include "dbsgen/eval/metrics.hpp"
#include "dbsgen/io/config.hpp"
#include "dbsgen/io/dataset.hpp"
#include "dbsgen/io/synthetic.hpp"
#include "dbsgen/models/checkpoint.hpp"
#include "dbsgen/pipeline/pipeline.hpp"
#include "dbsgen/segmentation/segmentation.hpp"
#include "json.hpp"

namespace dbsgen::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct RunOptions {
  std::string sequence;
  std::string out;
  std::string config;
  bool no_motion = false;
  bool no_postproc = false;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  io::LoadOptions load;
  bool quiet = false;
};

struct EvalOptions {
  std::string masks;
  std::string sequence;
  std::string out;
  std::optional<std::size_t> start;
  std::optional<std::size_t> max_frames;
  std::optional<int> downscale;
};

struct SynthOptions {
  std::string spec;
  std::string out;
  int jpeg_quality = 95;
};

struct ReportOptions {
  std::vector<std::string> directories;
  std::string out;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError("malformed " + path.string() + ": " + e.what());
  }
}

// DBSGEN_THREADS, when set, supplies the default worker count.
std::optional<std::size_t> env_threads() {
  const char* v = std::getenv("DBSGEN_THREADS");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("DBSGEN_THREADS must be a positive integer, got \"" + std::string(v) + "\"");
  return static_cast<std::size_t>(n);
}

Tensor crop_map(const Tensor& map, std::size_t h, std::size_t w) {
  Tensor out(Shape{h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out[y * w + x] = map[y * map.dim(1) + x];
  return out;
}

eval::MetricsReport evaluate(const std::string& name, const std::vector<segmentation::Mask>& masks,
                             const io::Sequence& seq, eval::RunMetadata meta) {
  eval::VideoMetrics video;
  video.name = name;
  video.counts = eval::compare_masks(masks, seq.ground_truth, seq.manifest.roi_first, seq.manifest.roi_last);
  video.scores = eval::f_measure(video.counts);
  return eval::aggregate_report({video}, std::move(meta));
}

int run_command(const RunOptions& o, std::ostream& out) {
  const std::string started = eval::timestamp_now();
  io::RunConfig config = o.config.empty() ? io::RunConfig{} : io::load_config(o.config);
  if (o.no_motion) config.training.use_motion = false;
  if (o.no_postproc) config.segmentation.postprocess = false;
  if (o.epochs) config.training.epochs = *o.epochs;
  if (o.seed) config.training.seed = *o.seed;
  if (o.threads) {
    config.training.threads = *o.threads;
  } else if (auto t = env_threads()) {
    config.training.threads = *t;
  }
  config.training.validate();

  const io::Sequence seq = io::load_sequence(o.sequence, o.load);
  const io::SequenceManifest& m = seq.manifest;
  if (!o.quiet) {
    out << "loaded " << m.frames << " frames of " << m.name << " (" << m.original_width << "x" << m.original_height
        << ", padded to " << m.width << "x" << m.height << ")\n";
  }

  const pipeline::SequenceArtifacts artifacts =
      pipeline::optimize(seq.frames, config.training, [&](const pipeline::EpochLoss& e) {
        if (!o.quiet) {
          out << "epoch " << e.epoch << "/" << config.training.epochs << " loss " << format_double(e.total) << '\n';
          out.flush();
        }
      });
  std::vector<Tensor> motion;
  for (const auto& maps : artifacts.motion) motion.push_back(maps.full);
  const segmentation::SegmentationResult seg =
      segmentation::segment_sequence(seq.frames, motion, artifacts.backgrounds, config.segmentation);

  const fs::path dir(o.out);
  const auto crop = std::make_pair(m.original_height, m.original_width);
  fs::create_directories(dir / "motion");
  fs::create_directories(dir / "background");
  io::write_masks(seg.masks, dir / "masks", m.first_index, crop);
  for (std::size_t i = 0; i < m.frames; ++i) {
    const std::size_t index = m.first_index + i;
    io::write_motion(io::crop_image(motion[i], m.original_height, m.original_width),
                     dir / "motion" / io::frame_file_name("motion", index, "bin"));
    io::write_rgb(io::crop_image(artifacts.backgrounds[i], m.original_height, m.original_width),
                  dir / "background" / io::frame_file_name("bg", index, "png"));
  }
  io::write_gray(crop_map(seg.entropy.combined, m.original_height, m.original_width), dir / "entropy.png");
  std::ostringstream csv;
  csv << "epoch,total,recons,motion,reg\n";
  for (const auto& e : artifacts.trace) {
    csv << e.epoch << ',' << format_double(e.total) << ',' << format_double(e.recons) << ','
        << format_double(e.motion) << ',' << format_double(e.reg) << '\n';
  }
  write_text(dir / "loss.csv", csv.str());
  models::save_checkpoint(artifacts.state, dir / "checkpoint.dbsgen");
  write_text(dir / "config.json", io::config_json(config));

  eval::RunMetadata meta;
  meta.config_hash = io::config_hash(config);
  meta.seed = config.training.seed;
  meta.started = started;
  meta.flags = {{"no_motion", o.no_motion ? "true" : "false"},
                {"no_postproc", o.no_postproc ? "true" : "false"},
                {"config", o.config},
                {"start", std::to_string(o.load.start)},
                {"max_frames", std::to_string(o.load.max_frames)},
                {"downscale", std::to_string(o.load.downscale)}};
  if (o.epochs) meta.flags["epochs"] = std::to_string(*o.epochs);
  if (o.seed) meta.flags["seed"] = std::to_string(*o.seed);
  meta.finished = eval::timestamp_now();

  Json run;
  run["sequence"] = {{"name", m.name},
                     {"first_index", m.first_index},
                     {"frames", m.frames},
                     {"roi", {m.roi_first, m.roi_last}},
                     {"original_size", {m.original_height, m.original_width}},
                     {"padded_size", {m.height, m.width}}};
  run["load"] = {{"start", o.load.start}, {"max_frames", o.load.max_frames}, {"downscale", o.load.downscale}};
  run["config_hash"] = meta.config_hash;
  run["seed"] = meta.seed;
  run["flags"] = meta.flags;
  run["started"] = meta.started;
  run["finished"] = meta.finished;
  run["final_loss"] = artifacts.trace.back().total;
  write_text(dir / "run.json", run.dump(2) + "\n");

  if (!seq.ground_truth.empty()) {
    std::vector<segmentation::Mask> cropped;
    for (const auto& mask : seg.masks) cropped.push_back(io::crop_mask(mask, m.original_height, m.original_width));
    const eval::MetricsReport report = evaluate(m.name, cropped, seq, meta);
    eval::write_report(report, dir);
    out << eval::report_table(report);
  }
  out << "wrote " << m.frames << " masks to " << (dir / "masks").string() << '\n';
  return kSuccess;
}

// Run directories hold masks/ next to run.json; a bare mask directory works too.
int eval_command(const EvalOptions& o, std::ostream& out) {
  fs::path mask_dir(o.masks);
  fs::path run_dir = mask_dir;
  if (fs::is_directory(mask_dir / "masks")) {
    mask_dir /= "masks";
  } else {
    run_dir = mask_dir.parent_path();
  }
  io::LoadOptions load;
  eval::RunMetadata meta;
  if (fs::exists(run_dir / "run.json")) {
    const Json run = read_json(run_dir / "run.json");
    try {
      load.start = run.at("load").at("start").get<std::size_t>();
      load.max_frames = run.at("load").at("max_frames").get<std::size_t>();
      load.downscale = run.at("load").at("downscale").get<int>();
      meta.config_hash = run.at("config_hash").get<std::string>();
      meta.seed = run.at("seed").get<std::uint64_t>();
      meta.started = run.at("started").get<std::string>();
      meta.finished = run.at("finished").get<std::string>();
      meta.flags = run.at("flags").get<std::map<std::string, std::string>>();
    } catch (const Json::exception& e) {
      throw DataError("malformed " + (run_dir / "run.json").string() + ": " + e.what());
    }
  }
  if (o.start) load.start = *o.start;
  if (o.max_frames) load.max_frames = *o.max_frames;
  if (o.downscale) load.downscale = *o.downscale;

  const io::Sequence seq = io::load_sequence(o.sequence, load);
  if (seq.ground_truth.empty()) throw DataError("sequence " + o.sequence + " has no ground truth");
  const auto masks = io::read_masks(mask_dir, seq.manifest.first_index, seq.manifest.frames);
  const eval::MetricsReport report = evaluate(seq.manifest.name, masks, seq, meta);
  const fs::path target = o.out.empty() ? run_dir : fs::path(o.out);
  fs::create_directories(target);
  eval::write_report(report, target);
  out << eval::report_table(report);
  return kSuccess;
}

int synth_command(const SynthOptions& o, std::ostream& out) {
  const io::SyntheticSpec spec = o.spec == "default" ? io::SyntheticSpec{} : io::load_synthetic_spec(o.spec);
  spec.validate();
  io::write_sequence(io::generate_synthetic_sequence(spec), o.out, o.jpeg_quality);
  out << "wrote " << spec.frames << " frames (" << spec.width << "x" << spec.height << ") to " << o.out << '\n';
  return kSuccess;
}

int report_command(const ReportOptions& o, std::ostream& out) {
  std::vector<eval::VideoMetrics> videos;
  std::set<std::string> hashes;
  eval::RunMetadata meta;
  for (const std::string& d : o.directories) {
    eval::MetricsReport r = eval::read_report(d);
    if (!r.metadata.config_hash.empty()) hashes.insert(r.metadata.config_hash);
    if (videos.empty()) meta = r.metadata;
    for (auto& v : r.videos) videos.push_back(std::move(v));
  }
  // Distinct configs are all recorded, comma separated.
  meta.config_hash.clear();
  for (const std::string& h : hashes) meta.config_hash += (meta.config_hash.empty() ? "" : ",") + h;
  const eval::MetricsReport report = eval::aggregate_report(std::move(videos), meta);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    eval::write_report(report, o.out);
  }
  out << eval::report_table(report);
  return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised dynamic background subtraction", "dbsgen"};
  app.require_subcommand(1);
  app.allow_extras(false);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Optimize, segment and write masks for one sequence");
  run_cmd->add_option("sequence", run.sequence, "CDnet sequence or frame directory")->required();
  run_cmd->add_option("-o,--out", run.out, "Output directory")->required();
  run_cmd->add_option("-c,--config", run.config, "JSON run configuration");
  run_cmd->add_flag("--no-motion", run.no_motion, "Skip motion estimation (frames used unwarped)");
  run_cmd->add_flag("--no-postproc", run.no_postproc, "Skip median filtering and closing");
  run_cmd->add_option("--epochs", run.epochs, "Override the epoch count")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Override the random seed");
  run_cmd->add_option("--threads", run.threads, "Worker threads (default: DBSGEN_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--start", run.load.start, "First file number to load; 0 starts at the temporal ROI");
  run_cmd->add_option("--max-frames", run.load.max_frames, "Load at most this many frames (0: all)");
  run_cmd->add_option("--downscale", run.load.downscale, "Integer downscale factor")->check(CLI::PositiveNumber);
  run_cmd->add_flag("-q,--quiet", run.quiet, "Only print the summary");

  EvalOptions ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a mask directory against a sequence's ground truth");
  eval_cmd->add_option("masks", ev.masks, "Run directory or directory of bin%06d.png masks")->required();
  eval_cmd->add_option("sequence", ev.sequence, "CDnet sequence directory")->required();
  eval_cmd->add_option("-o,--out", ev.out, "Report directory (default: the run directory)");
  eval_cmd->add_option("--start", ev.start, "First file number (default: as recorded by run)");
  eval_cmd->add_option("--max-frames", ev.max_frames, "Frame limit (default: as recorded by run)");
  eval_cmd->add_option("--downscale", ev.downscale, "Downscale factor (default: as recorded by run)")
      ->check(CLI::PositiveNumber);

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a synthetic sequence in CDnet layout");
  synth_cmd->add_option("spec", synth.spec, "JSON scene spec, or \"default\"")->required();
  synth_cmd->add_option("out", synth.out, "Output sequence directory")->required();
  synth_cmd->add_option("--jpeg-quality", synth.jpeg_quality, "JPEG quality of the frames")
      ->check(CLI::Range(1, 100));

  ReportOptions rep;
  CLI::App* report_cmd = app.add_subcommand("report", "Average the reports of several runs");
  report_cmd->add_option("directories", rep.directories, "Directories holding report.json")->required();
  report_cmd->add_option("-o,--out", rep.out, "Write the combined report here");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsageError;
  }

  try {
    if (run_cmd->parsed()) return run_command(run, out);
    if (eval_cmd->parsed()) return eval_command(ev, out);
    if (synth_cmd->parsed()) return synth_command(synth, out);
    return report_command(rep, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace dbsgen::cli
