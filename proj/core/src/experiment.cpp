#include "tfgsmooth/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/so3.hpp"

namespace tfgsmooth {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double to_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("config '" + std::string(key) + "': invalid number '" + std::string(text) +
                     "'");
  }
  return value;
}

long long to_integer(std::string_view key, std::string_view text) {
  text = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("config '" + std::string(key) + "': invalid integer '" + std::string(text) +
                     "'");
  }
  return value;
}

bool to_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError("config '" + std::string(key) + "': invalid boolean '" + std::string(text) +
                   "'");
}

Vec3 to_vec3(std::string_view key, std::string_view text) {
  const auto items = split_list(text);
  if (items.size() != 3) {
    throw InputError("config '" + std::string(key) + "': expected three comma-separated values");
  }
  return {to_double(key, items[0]), to_double(key, items[1]), to_double(key, items[2])};
}

}  // namespace

std::string_view to_string(YawInit mode) {
  switch (mode) {
    case YawInit::kUniform:
      return "uniform";
    case YawInit::kGaussian:
      return "gaussian";
    case YawInit::kFixed:
      return "fixed";
    case YawInit::kTruth:
      return "truth";
  }
  return "unknown";
}

YawInit parse_yaw_init(std::string_view name) {
  if (name == "uniform") return YawInit::kUniform;
  if (name == "gaussian") return YawInit::kGaussian;
  if (name == "fixed") return YawInit::kFixed;
  if (name == "truth") return YawInit::kTruth;
  throw InputError("unknown yaw_init '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw InputError("runs must be at least 1");
  if (methods.empty()) throw InputError("at least one method is required");
  if (windows.empty()) throw InputError("at least one window size is required");
  for (auto w : windows) {
    if (w < 2) throw InputError("window sizes must be at least 2");
  }
  const double sigmas[] = {noise.sigma_y,         noise.process.sigma_a, noise.process.sigma_w,
                           noise.process.sigma_ba, noise.process.sigma_bw, noise.sigma_p0,
                           noise.sigma_v0,        noise.sigma_R0,        noise.sigma_ba0,
                           noise.sigma_bw0};
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw InputError("noise values must be nonnegative");
  }
  if (!(horizon > 0.0)) throw InputError("horizon must be positive");
  if (!(gnss_rate > 0.0)) throw InputError("gnss_rate must be positive");
  if (workers < 1) throw InputError("workers must be at least 1");
  if (source == "synthetic") trajectory.validate();
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  auto positive_int = [&](long long v) {
    if (v < 0) throw InputError("config '" + std::string(key) + "' must be nonnegative");
    return v;
  };
  if (key == "source") {
    source = std::string(value);
  } else if (key == "sequence") {
    sequence = std::string(value);
  } else if (key == "duration") {
    trajectory.duration = to_double(key, value);
  } else if (key == "imu_rate") {
    trajectory.imu_rate = to_double(key, value);
  } else if (key == "gnss_rate") {
    trajectory.gnss_rate = gnss_rate = to_double(key, value);
  } else if (key == "profile") {
    trajectory.profile = parse_motion_profile(value);
  } else if (key == "speed") {
    trajectory.speed = to_double(key, value);
  } else if (key == "turn_rate") {
    trajectory.turn_rate = to_double(key, value);
  } else if (key == "initial_yaw_deg") {
    trajectory.initial_yaw = to_double(key, value) * kDeg;
  } else if (key == "true_ba") {
    trajectory.true_ba = to_vec3(key, value);
  } else if (key == "true_bw") {
    trajectory.true_bw = to_vec3(key, value);
  } else if (key == "gravity") {
    trajectory.gravity = to_vec3(key, value);
  } else if (key == "sigma_y") {
    noise.sigma_y = to_double(key, value);
  } else if (key == "sigma_a") {
    noise.process.sigma_a = to_double(key, value);
  } else if (key == "sigma_w") {
    noise.process.sigma_w = to_double(key, value);
  } else if (key == "sigma_ba") {
    noise.process.sigma_ba = to_double(key, value);
  } else if (key == "sigma_bw") {
    noise.process.sigma_bw = to_double(key, value);
  } else if (key == "sigma_p0") {
    noise.sigma_p0 = to_double(key, value);
  } else if (key == "sigma_v0") {
    noise.sigma_v0 = to_double(key, value);
  } else if (key == "sigma_R0_deg") {
    noise.sigma_R0 = to_double(key, value) * kDeg;
  } else if (key == "sigma_ba0") {
    noise.sigma_ba0 = to_double(key, value);
  } else if (key == "sigma_bw0") {
    noise.sigma_bw0 = to_double(key, value);
  } else if (key == "noiseless_data") {
    noiseless_data = to_bool(key, value);
  } else if (key == "methods") {
    methods.clear();
    for (auto m : split_list(value)) methods.push_back(parse_parametrization(m));
  } else if (key == "windows") {
    windows.clear();
    for (auto w : split_list(value)) {
      windows.push_back(static_cast<std::size_t>(positive_int(to_integer(key, w))));
    }
  } else if (key == "runs") {
    runs = static_cast<int>(to_integer(key, value));
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(positive_int(to_integer(key, value)));
  } else if (key == "yaw_init") {
    yaw_init = parse_yaw_init(value);
  } else if (key == "yaw_error_deg") {
    yaw_error_deg = to_double(key, value);
  } else if (key == "horizon") {
    horizon = to_double(key, value);
  } else if (key == "max_iterations") {
    solver.max_iterations = static_cast<int>(to_integer(key, value));
  } else if (key == "cost_tolerance") {
    solver.cost_tolerance = to_double(key, value);
  } else if (key == "step_tolerance") {
    solver.step_tolerance = to_double(key, value);
  } else if (key == "lm_lambda") {
    solver.lm_initial_lambda = to_double(key, value);
  } else if (key == "workers") {
    workers = static_cast<unsigned>(positive_int(to_integer(key, value)));
  } else if (key == "keep_going") {
    keep_going = to_bool(key, value);
  } else {
    throw InputError("unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    view = trim(view.substr(0, view.find('#')));
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    try {
      cfg.set(trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const InputError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse(in);
}

std::string ExperimentConfig::sequence_name() const {
  if (!sequence.empty()) return sequence;
  const auto colon = source.find(':');
  if (colon == std::string::npos) return source;
  return std::filesystem::path(source.substr(colon + 1)).filename().string();
}

// ---------------------------------------------------------------------------

Dataset load_source(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.source == "synthetic") {
    NoiseSpec data_noise = cfg.noise;
    if (cfg.noiseless_data) {
      data_noise.sigma_y = 0.0;
      data_noise.process = ProcessNoise{0.0, 0.0, 0.0, 0.0};
    }
    data_noise.seed = seed;
    return generate(cfg.trajectory, data_noise);
  }
  Dataset data;
  if (cfg.source.starts_with("csv:")) {
    data = load_csv(std::filesystem::path(cfg.source.substr(4)));
  } else if (cfg.source.starts_with("kitti:")) {
    data = convert_kitti_oxts(cfg.source.substr(6));
  } else {
    throw InputError("unknown source '" + cfg.source + "'");
  }
  if (data.gnss.empty()) {
    synthesize_gnss(data, cfg.gnss_rate, cfg.noiseless_data ? 0.0 : cfg.noise.sigma_y, seed);
  }
  data.validate();
  return data;
}

double yaw_error_deg(const Mat3& R_est, const Mat3& R_true) {
  return so3::to_rpy(R_est.transpose() * R_true).z() / kDeg;
}

RunRecord run_cell(const ExperimentConfig& cfg, const Dataset& data, Parametrization method,
                   std::size_t window_size, std::uint64_t seed) {
  if (data.gnss.empty()) throw InputError("run_cell: dataset has no position fixes");
  if (data.truth.empty()) throw InputError("run_cell: dataset has no truth");
  RunRecord rec;
  rec.seed = seed;

  // Separate stream from the data generator.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x79617721u};
  std::mt19937_64 rng(seq);

  const double t0 = data.gnss.front().t;
  const TfgElement& truth0 = data.truth_at(t0).x;
  TfgElement init;
  init.p = truth0.p;
  const double true_yaw = so3::to_rpy(truth0.R).z();
  switch (cfg.yaw_init) {
    case YawInit::kUniform: {
      std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
      double err = u(rng);
      if (err == -std::numbers::pi) err = std::numbers::pi;
      init.R = so3::rot_z(true_yaw + err);
      break;
    }
    case YawInit::kGaussian: {
      std::normal_distribution<double> n(0.0, cfg.noise.sigma_R0);
      init.R = so3::rot_z(true_yaw + n(rng));
      break;
    }
    case YawInit::kFixed:
      init.R = so3::rot_z(true_yaw + cfg.yaw_error_deg * kDeg);
      break;
    case YawInit::kTruth:
      init = truth0;
      break;
  }

  const NoiseSpec& ns = cfg.noise;
  Mat15 P0 = Mat15::Zero();
  P0.diagonal().segment<3>(kRot).setConstant(ns.sigma_R0 * ns.sigma_R0);
  P0.diagonal().segment<3>(kVel).setConstant(ns.sigma_v0 * ns.sigma_v0);
  P0.diagonal().segment<3>(kPos).setConstant(ns.sigma_p0 * ns.sigma_p0);
  P0.diagonal().segment<3>(kBa).setConstant(ns.sigma_ba0 * ns.sigma_ba0);
  P0.diagonal().segment<3>(kBw).setConstant(ns.sigma_bw0 * ns.sigma_bw0);
  const Mat3 fix_cov = ns.sigma_y * ns.sigma_y * Mat3::Identity();

  SolverConfig solver = cfg.solver;
  solver.window_size = window_size;
  SlidingWindowSmoother smoother(method, solver, ns.process, cfg.trajectory.gravity);

  auto record = [&](double t, const SolveReport& report) {
    for (std::size_t k = 1; k < report.cost_trace.size(); ++k) {
      ++rec.lm_accepted;
      if (report.cost_trace[k] > report.cost_trace[k - 1]) ++rec.lm_violations;
    }
    const Window& w = smoother.window();
    const TfgElement& est = w.states.back().estimate;
    const TfgElement& truth = data.truth_at(t).x;
    const Mat15 C = covariance_at(w, w.states.size() - 1);
    rec.t.push_back(t);
    rec.yaw_error_deg.push_back(yaw_error_deg(est.R, truth.R));
    rec.yaw_3sigma_deg.push_back(3.0 * std::sqrt(std::max(C(kRot + 2, kRot + 2), 0.0)) / kDeg);
    rec.position_error_m.push_back((est.p - truth.p).norm());
  };

  try {
    smoother.initialize(t0, init, PriorFactor{init, P0});
    smoother.add_position(data.gnss.front().y, fix_cov);
    record(t0, smoother.update());
    for (std::size_t j = 1; j < data.gnss.size(); ++j) {
      const double t = data.gnss[j].t;
      if (t > t0 + cfg.horizon + 1e-9) break;
      ImuSegment seg{data.imu_between(data.gnss[j - 1].t, t), t};
      if (seg.samples.empty()) {
        throw InputError("no IMU samples between fixes at t=" + std::to_string(data.gnss[j - 1].t));
      }
      smoother.add_state(std::move(seg));
      smoother.add_position(data.gnss[j].y, fix_cov);
      record(t, smoother.update());
    }
  } catch (const SolverError& e) {
    rec.failed = true;
    rec.failure = e.what();
  } catch (const NumericalError& e) {
    rec.failed = true;
    rec.failure = e.what();
  } catch (const DomainError& e) {
    rec.failed = true;
    rec.failure = e.what();
  }

  rec.consistent = !rec.failed;
  for (std::size_t k = 0; k < rec.t.size() && rec.consistent; ++k) {
    if (!(std::abs(rec.yaw_error_deg[k]) <= rec.yaw_3sigma_deg[k])) rec.consistent = false;
  }
  return rec;
}

RunRecord run_cell(const ExperimentConfig& cfg, Parametrization method, std::size_t window_size,
                   std::uint64_t seed) {
  return run_cell(cfg, load_source(cfg, seed), method, window_size, seed);
}

double consistency_ratio(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InputError("consistency_ratio: no records");
  const auto good = std::count_if(records.begin(), records.end(),
                                  [](const RunRecord& r) { return r.consistent; });
  return static_cast<double>(good) / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------

std::vector<CellResult> run_experiment(
    const ExperimentConfig& cfg,
    const std::function<void(std::size_t, std::size_t)>& progress) {
  cfg.validate();
  const auto runs = static_cast<std::size_t>(cfg.runs);

  // Synthetic data differs per seed; recorded data only in its fixes.
  std::vector<Dataset> datasets;
  datasets.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) datasets.push_back(load_source(cfg, cfg.seed + r));

  std::vector<CellResult> cells;
  for (auto method : cfg.methods) {
    for (auto window : cfg.windows) {
      CellResult cell;
      cell.sequence = cfg.sequence_name();
      cell.method = method;
      cell.window = window;
      cell.runs.resize(runs);
      cells.push_back(std::move(cell));
    }
  }

  const std::size_t total = cells.size() * runs;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mutex;
  std::size_t done = 0;
  std::exception_ptr first_error;
  std::vector<std::vector<char>> ok(cells.size(), std::vector<char>(runs, 1));

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total) break;
      const std::size_t c = task / runs;
      const std::size_t r = task % runs;
      CellResult& cell = cells[c];
      try {
        cell.runs[r] = run_cell(cfg, datasets[r], cell.method, cell.window, cfg.seed + r);
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        ok[c][r] = 0;
        cell.errors.push_back("run " + std::to_string(r) + ": " + e.what());
        if (!first_error) first_error = std::current_exception();
        if (!cfg.keep_going) stop = true;
      }
      std::lock_guard lock(mutex);
      ++done;
      if (progress) progress(done, total);
    }
  };

  const unsigned n = std::min<std::size_t>(cfg.workers, total);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  if (first_error && !cfg.keep_going) std::rethrow_exception(first_error);

  // Runs that hit a hard error carry no record.
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<RunRecord> kept;
    for (std::size_t r = 0; r < runs; ++r) {
      if (ok[c][r]) kept.push_back(std::move(cells[c].runs[r]));
    }
    cells[c].runs = std::move(kept);
    std::sort(cells[c].errors.begin(), cells[c].errors.end());
  }
  return cells;
}

// ---------------------------------------------------------------------------

namespace {

std::string format_ratio(const CellResult* cell) {
  if (cell == nullptr || cell->runs.empty()) return {};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", consistency_ratio(cell->runs));
  return buf;
}

std::string file_label(std::string_view s) {
  std::string out(s);
  for (char& ch : out) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-') ch = '_';
  }
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void emit_report(const std::vector<CellResult>& cells, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "traces", ec);
  if (ec) throw IoError("cannot create '" + (out_dir / "traces").string() + "': " + ec.message());

  // Rows keyed by (sequence, window) in first-appearance order.
  std::vector<std::pair<std::string, std::size_t>> rows;
  std::map<std::tuple<std::string, std::size_t, Parametrization>, const CellResult*> index;
  for (const auto& cell : cells) {
    const auto key = std::make_pair(cell.sequence, cell.window);
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
    index[{cell.sequence, cell.window, cell.method}] = &cell;
  }
  auto lookup = [&](const auto& row, Parametrization m) -> const CellResult* {
    const auto it = index.find({row.first, row.second, m});
    return it == index.end() ? nullptr : it->second;
  };

  {
    auto md = open_for_write(out_dir / "table.md");
    md << "| sequence | window | tfg | se23 | linear |\n|---|---|---|---|---|\n";
    for (const auto& row : rows) {
      md << "| " << row.first << " | " << row.second;
      for (auto m : kAllParametrizations) {
        const std::string v = format_ratio(lookup(row, m));
        md << " | " << (v.empty() ? "-" : v);
      }
      md << " |\n";
    }
    auto csv = open_for_write(out_dir / "table.csv");
    csv << "sequence,window,tfg,se23,linear\n";
    for (const auto& row : rows) {
      csv << row.first << ',' << row.second;
      for (auto m : kAllParametrizations) csv << ',' << format_ratio(lookup(row, m));
      csv << '\n';
    }
    if (!md || !csv) throw IoError("failed writing the table under '" + out_dir.string() + "'");
  }

  auto runs_csv = open_for_write(out_dir / "runs.csv");
  runs_csv << "sequence,method,window,run,seed,consistent,failed,max_abs_yaw_error_deg,"
              "final_yaw_error_deg,final_position_error_m\n";
  runs_csv << std::setprecision(10);
  for (const auto& cell : cells) {
    const std::string base = file_label(cell.sequence) + "_" + std::string(to_string(cell.method)) +
                             "_w" + std::to_string(cell.window);
    for (std::size_t r = 0; r < cell.runs.size(); ++r) {
      const RunRecord& rec = cell.runs[r];
      double max_err = 0.0;
      for (double e : rec.yaw_error_deg) max_err = std::max(max_err, std::abs(e));
      runs_csv << cell.sequence << ',' << to_string(cell.method) << ',' << cell.window << ',' << r
               << ',' << rec.seed << ',' << rec.consistent << ',' << rec.failed << ',' << max_err
               << ',' << (rec.yaw_error_deg.empty() ? 0.0 : rec.yaw_error_deg.back()) << ','
               << (rec.position_error_m.empty() ? 0.0 : rec.position_error_m.back()) << '\n';

      char name[32];
      std::snprintf(name, sizeof name, "_run%03zu.csv", r);
      auto trace = open_for_write(out_dir / "traces" / (base + name));
      trace << "t,yaw_error_deg,yaw_3sigma_deg,position_error_m\n" << std::setprecision(10);
      for (std::size_t k = 0; k < rec.t.size(); ++k) {
        trace << rec.t[k] << ',' << rec.yaw_error_deg[k] << ',' << rec.yaw_3sigma_deg[k] << ','
              << rec.position_error_m[k] << '\n';
      }
      if (!trace) throw IoError("failed writing trace for " + base);
    }
  }
  if (!runs_csv) throw IoError("failed writing runs.csv");
}

}  // namespace tfgsmooth
