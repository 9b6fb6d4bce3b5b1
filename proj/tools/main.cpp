// tfgsmooth command line: Monte Carlo consistency runs and data utilities.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tfgsmooth/dataset.hpp"
#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/experiment.hpp"

namespace fs = std::filesystem;
using namespace tfgsmooth;

namespace {

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<std::string> methods, windows, gravity, source;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool keep_going = false;
  bool quiet = false;
};

int do_run(const RunOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config);
  if (o.source) cfg.set("source", *o.source);
  if (o.methods) cfg.set("methods", *o.methods);
  if (o.windows) cfg.set("windows", *o.windows);
  if (o.gravity) cfg.set("gravity", *o.gravity);
  if (o.runs) cfg.set("runs", std::to_string(*o.runs));
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (o.workers) cfg.set("workers", std::to_string(*o.workers));
  if (o.keep_going) cfg.keep_going = true;
  cfg.validate();

  auto progress = [&](std::size_t done, std::size_t total) {
    if (o.quiet) return;
    std::fprintf(stderr, "\r%zu/%zu runs", done, total);
    if (done == total) std::fputc('\n', stderr);
  };
  const auto cells = run_experiment(cfg, progress);
  emit_report(cells, o.out);

  int failures = 0;
  for (const auto& c : cells) {
    std::size_t failed = 0;
    for (const auto& r : c.runs) failed += r.failed ? 1 : 0;
    std::printf("%-10s %-6s w=%-3zu ratio=%.2f failed=%zu\n", c.sequence.c_str(),
                std::string(to_string(c.method)).c_str(), c.window,
                c.runs.empty() ? 0.0 : consistency_ratio(c.runs), failed);
    for (const auto& e : c.errors) {
      std::fprintf(stderr, "error: %s\n", e.c_str());
      ++failures;
    }
  }
  return failures > 0 && !cfg.keep_going ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-lag IMU/GNSS smoothing with TFG, SE2(3) and linear parametrizations"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Monte Carlo consistency experiment");
  run->add_option("--config", ro.config, "key = value configuration file")->check(CLI::ExistingFile);
  run->add_option("--out", ro.out, "output directory")->required();
  run->add_option("--source", ro.source, "synthetic, csv:<file> or kitti:<dir>");
  run->add_option("--methods", ro.methods, "comma list of tfg,se23,linear");
  run->add_option("--windows", ro.windows, "comma list of window sizes");
  run->add_option("--runs", ro.runs, "Monte Carlo runs per cell");
  run->add_option("--seed", ro.seed, "base seed; run r uses seed + r");
  run->add_option("--gravity", ro.gravity, "gx,gy,gz in m/s^2");
  run->add_option("--workers", ro.workers, "worker threads");
  run->add_flag("--keep-going", ro.keep_going, "record cell errors and continue");
  run->add_flag("--quiet", ro.quiet, "no progress output");

  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  gen->add_option("--config", gen_config, "configuration file")->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "noise seed");
  gen->add_option("--out", gen_out, "output CSV file")->required();

  std::string kitti_dir, kitti_out;
  double kitti_rate = 1.0, kitti_sigma = 1.0;
  std::uint64_t kitti_seed = 0;
  auto* kitti = app.add_subcommand("convert-kitti", "convert a KITTI raw OXTS directory to CSV");
  kitti->add_option("dir", kitti_dir, "drive directory or its oxts/ subdirectory")->required();
  kitti->add_option("--out", kitti_out, "output CSV file")->required();
  kitti->add_option("--gnss-rate", kitti_rate, "rate of synthesized fixes (Hz)");
  kitti->add_option("--sigma-y", kitti_sigma, "fix noise (m)");
  kitti->add_option("--seed", kitti_seed, "fix noise seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(ro);
    if (*gen) {
      ExperimentConfig cfg = gen_config.empty() ? ExperimentConfig{} : ExperimentConfig::load(gen_config);
      cfg.set("source", "synthetic");
      save_csv(load_source(cfg, gen_seed), fs::path(gen_out));
      return 0;
    }
    if (*kitti) {
      Dataset d = convert_kitti_oxts(kitti_dir);
      synthesize_gnss(d, kitti_rate, kitti_sigma, kitti_seed);
      save_csv(d, fs::path(kitti_out));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
