#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tfgsmooth/dataset.hpp"
#include "tfgsmooth/parametrization.hpp"
#include "tfgsmooth/smoother.hpp"

namespace tfgsmooth {

/// How the initial heading is drawn for each run.
///   kUniform  yaw error uniform on (-180, 180] deg
///   kGaussian yaw error ~ N(0, sigma_R0^2)
///   kFixed    yaw error equal to ExperimentConfig::yaw_error_deg
///   kTruth    the whole initial state is the truth
enum class YawInit { kUniform, kGaussian, kFixed, kTruth };

std::string_view to_string(YawInit mode);
YawInit parse_yaw_init(std::string_view name);

struct ExperimentConfig {
  /// "synthetic", "csv:<path>" or "kitti:<dir>".
  std::string source = "synthetic";
  /// Row label in the report. Defaults to the source kind.
  std::string sequence;
  TrajectorySpec trajectory;
  NoiseSpec noise;
  /// Generate synthetic data without sensor noise; the estimator keeps the
  /// nominal noise model.
  bool noiseless_data = false;
  double gnss_rate = 1.0;  // Hz, used when a recorded source has no fixes
  std::vector<Parametrization> methods{kAllParametrizations.begin(), kAllParametrizations.end()};
  std::vector<std::size_t> windows{5, 10, 15};
  int runs = 50;
  std::uint64_t seed = 0;
  YawInit yaw_init = YawInit::kUniform;
  double yaw_error_deg = 0.0;  // kFixed only
  double horizon = 60.0;  // s of data after the first fix
  SolverConfig solver;
  unsigned workers = 1;
  bool keep_going = false;

  /// Throws InputError on runs < 1, window sizes < 2, no methods, or
  /// negative noise values.
  void validate() const;

  /// Applies one `key = value` entry. Keys mirror the field names; list
  /// values are comma-separated. Throws InputError on unknown keys or bad
  /// values.
  void set(std::string_view key, std::string_view value);

  /// Plain-text `key = value` lines, '#' starts a comment.
  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig load(const std::filesystem::path& path);

  std::string sequence_name() const;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<double> t;
  std::vector<double> yaw_error_deg;
  std::vector<double> yaw_3sigma_deg;
  std::vector<double> position_error_m;
  bool consistent = false;
  bool failed = false;
  std::string failure;
  /// Accepted LM steps that increased the cost, summed over all epochs.
  int lm_violations = 0;
  int lm_accepted = 0;
};

/// Loads or synthesizes the data a run sees. Synthetic data depends on the
/// seed; recorded sources only draw their fixes from it.
Dataset load_source(const ExperimentConfig& cfg, std::uint64_t seed);

/// One Monte Carlo run on the given data. Solver breakdowns produce a
/// failed (and inconsistent) record; input errors propagate.
RunRecord run_cell(const ExperimentConfig& cfg, const Dataset& data, Parametrization method,
                   std::size_t window_size, std::uint64_t seed);
RunRecord run_cell(const ExperimentConfig& cfg, Parametrization method, std::size_t window_size,
                   std::uint64_t seed);

/// Fraction of consistent records. Throws InputError on an empty list.
double consistency_ratio(const std::vector<RunRecord>& records);

/// Yaw of the ZYX decomposition of R_est^T R_true, in degrees.
double yaw_error_deg(const Mat3& R_est, const Mat3& R_true);

struct CellResult {
  std::string sequence;
  Parametrization method = Parametrization::kTfg;
  std::size_t window = 0;
  std::vector<RunRecord> runs;
  std::vector<std::string> errors;
};

/// Runs every (method, window, run) task on cfg.workers threads. Run r uses
/// seed cfg.seed + r. Output order is fixed by the configuration, not by
/// completion order. Without keep_going the first hard error is rethrown
/// once the pool drains.
std::vector<CellResult> run_experiment(
    const ExperimentConfig& cfg,
    const std::function<void(std::size_t done, std::size_t total)>& progress = {});

/// Writes table.md, table.csv, runs.csv and traces/<cell>_runNN.csv under
/// out_dir. Throws IoError when the directory cannot be written.
void emit_report(const std::vector<CellResult>& cells, const std::filesystem::path& out_dir);

}  // namespace tfgsmooth
