#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "test_support.hpp"
#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/experiment.hpp"

namespace tfgsmooth {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RunRecord> records(int consistent, int total) {
  std::vector<RunRecord> out(static_cast<std::size_t>(total));
  for (int i = 0; i < consistent; ++i) out[static_cast<std::size_t>(i)].consistent = true;
  return out;
}

ExperimentConfig short_config() {
  ExperimentConfig cfg;
  cfg.trajectory.duration = 12.0;
  cfg.horizon = 12.0;
  cfg.runs = 3;
  cfg.windows = {3};
  return cfg;
}

TEST(ConsistencyRatio, Fractions) {
  EXPECT_EQ(consistency_ratio(records(50, 50)), 1.0);
  EXPECT_DOUBLE_EQ(consistency_ratio(records(39, 50)), 0.78);
  EXPECT_EQ(consistency_ratio(records(1, 1)), 1.0);
  EXPECT_EQ(consistency_ratio(records(0, 1)), 0.0);
  EXPECT_THROW(consistency_ratio({}), InputError);
}

TEST(ExperimentConfig, ParsesKeyValueText) {
  std::istringstream in(
      "# comment\n"
      "source = synthetic\n"
      "methods = tfg, linear   # trailing\n"
      "windows = 5,10\n"
      "runs = 7\n"
      "seed = 11\n"
      "gravity = 0, 0, -9.8\n"
      "sigma_R0_deg = 100\n"
      "yaw_init = gaussian\n"
      "keep_going = true\n");
  const ExperimentConfig cfg = ExperimentConfig::parse(in);
  EXPECT_EQ(cfg.methods, (std::vector{Parametrization::kTfg, Parametrization::kLinear}));
  EXPECT_EQ(cfg.windows, (std::vector<std::size_t>{5, 10}));
  EXPECT_EQ(cfg.runs, 7);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.trajectory.gravity, Vec3(0, 0, -9.8));
  EXPECT_NEAR(cfg.noise.sigma_R0, 100.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_EQ(cfg.yaw_init, YawInit::kGaussian);
  EXPECT_TRUE(cfg.keep_going);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ExperimentConfig, RejectsBadInput) {
  std::istringstream unknown("runs = 3\ncolour = blue\n");
  try {
    ExperimentConfig::parse(unknown);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream no_eq("runs 3\n");
  EXPECT_THROW(ExperimentConfig::parse(no_eq), ParseError);

  ExperimentConfig cfg;
  cfg.runs = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.runs = 1;
  cfg.windows = {1};
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.windows = {5};
  cfg.noise.sigma_y = -1.0;
  EXPECT_THROW(cfg.validate(), InputError);
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/cfg.txt"), IoError);
}

TEST(YawError, GradientIsAttitudeZComponent) {
  // Yaw of exp(xi) has gradient e_z at zero for every retraction, which is
  // why the 3-sigma bound reads the z attitude variance.
  testing::Sampler s(90);
  for (auto kind : kAllParametrizations) {
    const TfgElement x = s.element();
    const auto f = [&](const Eigen::VectorXd& xi) -> Eigen::VectorXd {
      Eigen::VectorXd out(1);
      out(0) = yaw_error_deg(x.R, retract(kind, x, Tangent(xi)).R) * std::numbers::pi / 180.0;
      return out;
    };
    const Eigen::MatrixXd grad = testing::numerical_jacobian(f, kStateDim, 1e-6);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(1, kStateDim);
    expected(0, kRot + 2) = 1.0;
    EXPECT_LT((grad - expected).cwiseAbs().maxCoeff(), 1e-8) << to_string(kind);
  }
  EXPECT_NEAR(yaw_error_deg(so3::rot_z(0.3), so3::rot_z(-0.2)), -0.5 * 180.0 / std::numbers::pi,
              1e-12);
}

TEST(RunCell, TruthInitializedNoiselessRunIsExact) {
  ExperimentConfig cfg = short_config();
  cfg.noiseless_data = true;
  cfg.yaw_init = YawInit::kTruth;
  for (auto kind : kAllParametrizations) {
    const RunRecord rec = run_cell(cfg, kind, 3, 0);
    EXPECT_FALSE(rec.failed) << rec.failure;
    EXPECT_TRUE(rec.consistent);
    ASSERT_EQ(rec.t.size(), 13u);
    EXPECT_EQ(rec.yaw_error_deg.size(), rec.yaw_3sigma_deg.size());
    EXPECT_EQ(rec.yaw_error_deg.size(), rec.position_error_m.size());
    for (double e : rec.yaw_error_deg) EXPECT_LT(std::abs(e), 1e-3);
    EXPECT_EQ(rec.lm_violations, 0);
  }
}

TEST(RunCell, Deterministic) {
  const ExperimentConfig cfg = short_config();
  const RunRecord a = run_cell(cfg, Parametrization::kTfg, 3, 4);
  const RunRecord b = run_cell(cfg, Parametrization::kTfg, 3, 4);
  EXPECT_EQ(a.yaw_error_deg, b.yaw_error_deg);
  EXPECT_EQ(a.yaw_3sigma_deg, b.yaw_3sigma_deg);
  EXPECT_EQ(a.position_error_m, b.position_error_m);
  EXPECT_EQ(a.consistent, b.consistent);
}

TEST(RunCell, OverconfidentPriorIsInconsistent) {
  ExperimentConfig cfg = short_config();
  cfg.yaw_init = YawInit::kFixed;
  cfg.yaw_error_deg = 90.0;
  cfg.noise.sigma_R0 = 0.01 * std::numbers::pi / 180.0;
  for (auto kind : kAllParametrizations) {
    const RunRecord rec = run_cell(cfg, kind, 3, 1);
    EXPECT_FALSE(rec.consistent) << to_string(kind);
    ASSERT_FALSE(rec.yaw_error_deg.empty());
    EXPECT_NEAR(std::abs(rec.yaw_error_deg.front()), 90.0, 5.0);
  }
}

TEST(RunCell, RequiresFixes) {
  Dataset empty;
  EXPECT_THROW(run_cell(short_config(), empty, Parametrization::kTfg, 3, 0), InputError);
}

TEST(RunExperiment, ParallelMatchesSerial) {
  ExperimentConfig cfg = short_config();
  cfg.methods = {Parametrization::kTfg, Parametrization::kSe23};
  cfg.windows = {2, 3};
  cfg.runs = 2;
  std::size_t calls = 0;
  const auto serial = run_experiment(cfg, [&](std::size_t done, std::size_t total) {
    ++calls;
    EXPECT_LE(done, total);
  });
  EXPECT_EQ(calls, 8u);
  cfg.workers = 3;
  const auto parallel = run_experiment(cfg);
  ASSERT_EQ(serial.size(), 4u);
  ASSERT_EQ(parallel.size(), 4u);
  for (std::size_t c = 0; c < serial.size(); ++c) {
    EXPECT_EQ(serial[c].method, parallel[c].method);
    EXPECT_EQ(serial[c].window, parallel[c].window);
    ASSERT_EQ(serial[c].runs.size(), 2u);
    for (std::size_t r = 0; r < 2; ++r) {
      EXPECT_EQ(serial[c].runs[r].seed, cfg.seed + r);
      EXPECT_EQ(serial[c].runs[r].yaw_error_deg, parallel[c].runs[r].yaw_error_deg);
    }
  }
}

TEST(RunExperiment, HardErrorsStopUnlessKeepGoing) {
  ExperimentConfig cfg = short_config();
  cfg.source = "csv:/nonexistent/data.csv";
  EXPECT_THROW(run_experiment(cfg), InputError);
}

TEST(EmitReport, TableAndTraces) {
  CellResult cell;
  cell.sequence = "synthetic";
  cell.method = Parametrization::kSe23;
  cell.window = 5;
  cell.runs = records(39, 50);
  for (std::size_t i = 0; i < cell.runs.size(); ++i) {
    cell.runs[i].seed = i;
    cell.runs[i].t = {0.0, 1.0};
    cell.runs[i].yaw_error_deg = {10.0, 1.0};
    cell.runs[i].yaw_3sigma_deg = {300.0, 2.0};
    cell.runs[i].position_error_m = {0.5, 0.4};
  }
  const auto dir = std::filesystem::temp_directory_path() / "tfgsmooth_report";
  std::filesystem::remove_all(dir);
  emit_report({cell}, dir);

  const std::string md = slurp(dir / "table.md");
  EXPECT_NE(md.find("| synthetic | 5 | - | 0.78 | - |"), std::string::npos) << md;
  const std::string csv = slurp(dir / "table.csv");
  EXPECT_EQ(csv, "sequence,window,tfg,se23,linear\nsynthetic,5,,0.78,\n");
  std::size_t traces = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "traces")) {
    (void)e;
    ++traces;
  }
  EXPECT_EQ(traces, 50u);
  EXPECT_EQ(slurp(dir / "traces" / "synthetic_se23_w5_run000.csv"),
            "t,yaw_error_deg,yaw_3sigma_deg,position_error_m\n0,10,300,0.5\n1,1,2,0.4\n");

  const std::string first = slurp(dir / "runs.csv");
  emit_report({cell}, dir);
  EXPECT_EQ(slurp(dir / "runs.csv"), first);
  EXPECT_EQ(slurp(dir / "table.md"), md);
}

TEST(EmitReport, UnwritableDirectory) {
  const auto file = std::filesystem::temp_directory_path() / "tfgsmooth_not_a_dir";
  std::ofstream(file) << "x";
  CellResult cell;
  cell.runs = records(1, 1);
  EXPECT_THROW(emit_report({cell}, file / "out"), IoError);
}

}  // namespace
}  // namespace tfgsmooth
