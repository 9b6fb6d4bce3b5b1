#include "tfgsmooth/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Geometry>

#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/so3.hpp"

namespace tfgsmooth {

std::string_view to_string(MotionProfile profile) {
  switch (profile) {
    case MotionProfile::kStraight:
      return "straight";
    case MotionProfile::kCircle:
      return "circle";
    case MotionProfile::kFigureEight:
      return "figure-eight";
    case MotionProfile::kPiecewiseTurns:
      return "piecewise-turns";
  }
  return "unknown";
}

MotionProfile parse_motion_profile(std::string_view name) {
  if (name == "straight") return MotionProfile::kStraight;
  if (name == "circle") return MotionProfile::kCircle;
  if (name == "figure-eight") return MotionProfile::kFigureEight;
  if (name == "piecewise-turns") return MotionProfile::kPiecewiseTurns;
  throw InputError("unknown motion profile '" + std::string(name) + "'");
}

void TrajectorySpec::validate() const {
  if (!(duration > 0.0)) throw InputError("duration must be positive");
  if (!(imu_rate > 0.0) || !(gnss_rate > 0.0)) throw InputError("rates must be positive");
  const double ratio = imu_rate / gnss_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
    throw InputError("imu_rate must be an integer multiple of gnss_rate");
  }
  if (!(speed > 0.0)) throw InputError("speed must be positive");
}

NoiseSpec NoiseSpec::noiseless() {
  NoiseSpec n;
  n.sigma_y = 0.0;
  n.process = ProcessNoise{0.0, 0.0, 0.0, 0.0};
  return n;
}

// ---------------------------------------------------------------------------
// Dataset helpers

namespace {

template <class T>
void check_increasing(const std::vector<T>& items, const char* stream) {
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (!(items[i].t > items[i - 1].t)) {
      throw InputError(std::string(stream) + " timestamps are not strictly increasing at entry " +
                       std::to_string(i));
    }
  }
}

}  // namespace

void Dataset::validate() const {
  check_increasing(imu, "IMU");
  check_increasing(gnss, "GNSS");
  check_increasing(truth, "truth");
  if (!truth.empty()) {
    for (const auto& fix : gnss) truth_at(fix.t);
  }
}

const TruthEntry& Dataset::truth_at(double t) const {
  auto it = std::lower_bound(truth.begin(), truth.end(), t - 1e-9,
                             [](const TruthEntry& e, double value) { return e.t < value; });
  if (it == truth.end() || std::abs(it->t - t) > 1e-9) {
    throw InputError("no truth entry at t=" + std::to_string(t));
  }
  return *it;
}

std::vector<ImuSample> Dataset::imu_between(double t0, double t1) const {
  auto first = std::lower_bound(imu.begin(), imu.end(), t0,
                                [](const ImuSample& s, double value) { return s.t < value; });
  auto last = std::lower_bound(first, imu.end(), t1,
                               [](const ImuSample& s, double value) { return s.t < value; });
  return {first, last};
}

// ---------------------------------------------------------------------------
// Synthetic generation

namespace {

struct Kinematics {
  double yaw = 0.0;
  double yaw_rate = 0.0;
  Vec3 v = Vec3::Zero();
  Vec3 v_dot = Vec3::Zero();
};

Vec3 planar(double yaw) { return {std::cos(yaw), std::sin(yaw), 0.0}; }

Kinematics heading_speed(double yaw, double yaw_rate, double speed) {
  return {yaw, yaw_rate, speed * planar(yaw),
          speed * yaw_rate * Vec3(-std::sin(yaw), std::cos(yaw), 0.0)};
}

// Straight legs of 7 s followed by 8 s smooth 90 degree turns, turn
// direction cycling left, left, right, left.
Kinematics piecewise_turns(double t, double yaw0, double speed) {
  constexpr double kStraight = 7.0;
  constexpr double kTurn = 8.0;
  constexpr double kPeriod = kStraight + kTurn;
  constexpr double kAmplitude = (std::numbers::pi / 2.0) / (kTurn / 2.0);
  constexpr std::array<double, 4> kSigns = {1.0, 1.0, -1.0, 1.0};

  const auto cycle = static_cast<long>(std::floor(t / kPeriod));
  double yaw = yaw0;
  for (long j = 0; j < cycle; ++j) yaw += kSigns[j % 4] * std::numbers::pi / 2.0;
  double rate = 0.0;
  const double tau = t - static_cast<double>(cycle) * kPeriod;
  if (tau > kStraight) {
    const double u = tau - kStraight;
    const double s = kSigns[cycle % 4];
    const double w = std::numbers::pi / kTurn;
    yaw += s * kAmplitude * (0.5 * u - std::sin(2.0 * w * u) / (4.0 * w));
    const double sw = std::sin(w * u);
    rate = s * kAmplitude * sw * sw;
  }
  return heading_speed(yaw, rate, speed);
}

// Lemniscate of Gerono scaled so the slowest point moves at `speed`.
Kinematics figure_eight(double t, double speed) {
  const double L = 10.0 * speed;
  const double w = speed / L;
  Kinematics k;
  k.v = Vec3(L * w * std::cos(w * t), L * w * std::cos(2.0 * w * t), 0.0);
  k.v_dot = Vec3(-L * w * w * std::sin(w * t), -2.0 * L * w * w * std::sin(2.0 * w * t), 0.0);
  k.yaw = std::atan2(k.v.y(), k.v.x());
  k.yaw_rate = (k.v.x() * k.v_dot.y() - k.v.y() * k.v_dot.x()) / k.v.squaredNorm();
  return k;
}

Kinematics kinematics_at(const TrajectorySpec& spec, double t) {
  switch (spec.profile) {
    case MotionProfile::kStraight:
      return heading_speed(spec.initial_yaw, 0.0, spec.speed);
    case MotionProfile::kCircle:
      return heading_speed(spec.initial_yaw + spec.turn_rate * t, spec.turn_rate, spec.speed);
    case MotionProfile::kFigureEight:
      return figure_eight(t, spec.speed);
    case MotionProfile::kPiecewiseTurns:
      return piecewise_turns(t, spec.initial_yaw, spec.speed);
  }
  return {};
}

Vec3 gaussian3(std::mt19937_64& rng, std::normal_distribution<double>& nd) {
  const double x = nd(rng);
  const double y = nd(rng);
  const double z = nd(rng);
  return {x, y, z};
}

}  // namespace

Dataset generate(const TrajectorySpec& spec, const NoiseSpec& noise) {
  spec.validate();
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> nd(0.0, 1.0);

  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.imu_rate));
  const auto decimation = static_cast<std::size_t>(std::llround(spec.imu_rate / spec.gnss_rate));
  auto time_of = [&](std::size_t k) { return static_cast<double>(k) / spec.imu_rate; };

  Dataset data;
  data.imu.reserve(n);
  data.truth.reserve(n + 1);

  const Kinematics k0 = kinematics_at(spec, 0.0);
  TfgElement x;
  x.R = so3::rot_z(k0.yaw);
  x.v = k0.v;
  x.ba = spec.true_ba;
  x.bw = spec.true_bw;
  data.truth.push_back({0.0, x});

  for (std::size_t k = 0; k < n; ++k) {
    const double t = time_of(k);
    const double dt = time_of(k + 1) - t;
    const Kinematics kin = kinematics_at(spec, t);
    // Exact inverse of the velocity row: a = R^T (v_dot - g) + ba.
    const ImuSample exact{t, Vec3(0.0, 0.0, kin.yaw_rate) + spec.true_bw,
                          x.R.transpose() * (kin.v_dot - spec.gravity) + spec.true_ba};
    x = propagate(x, exact, dt, spec.gravity);
    if ((k + 1) % kRenormalizeEvery == 0) x.R = so3::project(x.R);
    data.truth.push_back({time_of(k + 1), x});

    ImuSample measured = exact;
    measured.omega += noise.process.sigma_w * gaussian3(rng, nd);
    measured.accel += noise.process.sigma_a * gaussian3(rng, nd);
    data.imu.push_back(measured);
  }

  for (std::size_t idx = 0; idx <= n; idx += decimation) {
    const TruthEntry& e = data.truth[idx];
    data.gnss.push_back({e.t, e.x.p + noise.sigma_y * gaussian3(rng, nd), noise.sigma_y});
  }
  return data;
}

void synthesize_gnss(Dataset& data, double rate, double sigma, std::uint64_t seed) {
  if (!(rate > 0.0)) throw InputError("synthesize_gnss: rate must be positive");
  data.gnss.clear();
  if (data.truth.empty()) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double t0 = data.truth.front().t;
  const double t1 = data.truth.back().t;
  std::size_t cursor = 0;
  for (double epoch = t0; epoch <= t1 + 1e-9;) {
    while (cursor + 1 < data.truth.size() &&
           std::abs(data.truth[cursor + 1].t - epoch) <= std::abs(data.truth[cursor].t - epoch)) {
      ++cursor;
    }
    const TruthEntry& e = data.truth[cursor];
    if (data.gnss.empty() || e.t > data.gnss.back().t) {
      data.gnss.push_back({e.t, e.x.p + sigma * gaussian3(rng, nd), sigma});
    }
    epoch = t0 + static_cast<double>(data.gnss.size()) / rate;
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kHeader =
    "# tfgsmooth dataset\n"
    "# type,t,a,b,c,d,e,f,g,h,i,j\n"
    "# IMU,t,wx,wy,wz,ax,ay,az\n"
    "# GNSS,t,px,py,pz,sigma\n"
    "# TRUTH,t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,bax,bay,baz,bwx,bwy,bwz\n";

struct Row {
  std::string type;
  std::vector<double> values;
};

Row split_row(const std::string& line, std::size_t line_no) {
  Row row;
  std::size_t start = 0;
  bool first = true;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    std::string_view field(line.data() + start, end - start);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) {
      field.remove_prefix(1);
    }
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) {
      field.remove_suffix(1);
    }
    if (first) {
      row.type = std::string(field);
      first = false;
    } else {
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw ParseError(line_no, "invalid number '" + std::string(field) + "'");
      }
      row.values.push_back(value);
    }
    start = end + 1;
  }
  return row;
}

void write_vec(std::ostream& out, const Vec3& v) {
  out << ',' << v.x() << ',' << v.y() << ',' << v.z();
}

}  // namespace

void save_csv(const Dataset& data, std::ostream& out) {
  out << kHeader << std::setprecision(17);
  for (const auto& s : data.imu) {
    out << "IMU," << s.t;
    write_vec(out, s.omega);
    write_vec(out, s.accel);
    out << '\n';
  }
  for (const auto& f : data.gnss) {
    out << "GNSS," << f.t;
    write_vec(out, f.y);
    out << ',' << f.sigma << '\n';
  }
  for (const auto& e : data.truth) {
    const Eigen::Quaterniond q(e.x.R);
    out << "TRUTH," << e.t;
    write_vec(out, e.x.p);
    out << ',' << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z();
    write_vec(out, e.x.v);
    write_vec(out, e.x.ba);
    write_vec(out, e.x.bw);
    out << '\n';
  }
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  save_csv(data, out);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

Dataset load_csv(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  double last_imu = -INFINITY, last_gnss = -INFINITY, last_truth = -INFINITY;
  auto check_time = [&](double& last, double t, const char* stream) {
    if (!(t > last)) {
      throw InputError("line " + std::to_string(line_no) + ": " + stream +
                       " timestamp does not increase");
    }
    last = t;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    const Row row = split_row(line, line_no);
    const auto& v = row.values;
    auto vec = [&](std::size_t i) { return Vec3(v[i], v[i + 1], v[i + 2]); };
    if (row.type == "IMU") {
      if (v.size() != 7) throw ParseError(line_no, "IMU row needs 7 values");
      check_time(last_imu, v[0], "IMU");
      data.imu.push_back({v[0], vec(1), vec(4)});
    } else if (row.type == "GNSS") {
      if (v.size() != 5) throw ParseError(line_no, "GNSS row needs 5 values");
      check_time(last_gnss, v[0], "GNSS");
      data.gnss.push_back({v[0], vec(1), v[4]});
    } else if (row.type == "TRUTH") {
      if (v.size() != 11 && v.size() != 17) {
        throw ParseError(line_no, "TRUTH row needs 11 or 17 values");
      }
      check_time(last_truth, v[0], "TRUTH");
      TruthEntry e;
      e.t = v[0];
      e.x.p = vec(1);
      e.x.R = Eigen::Quaterniond(v[4], v[5], v[6], v[7]).normalized().toRotationMatrix();
      e.x.v = vec(8);
      if (v.size() == 17) {
        e.x.ba = vec(11);
        e.x.bw = vec(14);
      }
      data.truth.push_back(e);
    } else {
      throw ParseError(line_no, "unknown row type '" + row.type + "'");
    }
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return load_csv(in);
}

// ---------------------------------------------------------------------------
// KITTI OXTS

Vec3 geodetic_to_enu(const Vec3& lla, const Vec3& ref_lla) {
  constexpr double a = 6378137.0;
  constexpr double e2 = 6.69437999014e-3;
  auto ecef = [&](const Vec3& g) {
    const double sl = std::sin(g.x()), cl = std::cos(g.x());
    const double N = a / std::sqrt(1.0 - e2 * sl * sl);
    return Vec3((N + g.z()) * cl * std::cos(g.y()), (N + g.z()) * cl * std::sin(g.y()),
                (N * (1.0 - e2) + g.z()) * sl);
  };
  const Vec3 d = ecef(lla) - ecef(ref_lla);
  const double sl = std::sin(ref_lla.x()), cl = std::cos(ref_lla.x());
  const double so = std::sin(ref_lla.y()), co = std::cos(ref_lla.y());
  return {-so * d.x() + co * d.y(),
          -sl * co * d.x() - sl * so * d.y() + cl * d.z(),
          cl * co * d.x() + cl * so * d.y() + sl * d.z()};
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

struct Stamp {
  long day = 0;
  double second = 0.0;  // of the day
};

// "YYYY-MM-DD hh:mm:ss.fffffffff", split so sub-microsecond digits survive.
Stamp parse_timestamp(const std::string& text, std::size_t line_no) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0;
  double s = 0.0;
  char rest = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u %u:%u:%lf%c", &y, &mo, &d, &h, &mi, &s, &rest) != 6) {
    throw ParseError(line_no, "bad timestamp '" + text + "'");
  }
  return {days_from_civil(y, mo, d), h * 3600.0 + mi * 60.0 + s};
}

}  // namespace

Dataset convert_kitti_oxts(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::path root = dir;
  if (!fs::exists(root / "timestamps.txt") && fs::exists(root / "oxts" / "timestamps.txt")) {
    root /= "oxts";
  }
  std::ifstream ts(root / "timestamps.txt");
  if (!ts) throw InputError("missing timestamps.txt in '" + dir.string() + "'");

  std::vector<Stamp> stamps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ts, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    stamps.push_back(parse_timestamp(line, line_no));
  }
  if (stamps.empty()) throw InputError("no timestamps in '" + dir.string() + "'");
  std::vector<double> times;
  for (const auto& st : stamps) {
    times.push_back(static_cast<double>(st.day - stamps.front().day) * 86400.0 +
                    (st.second - stamps.front().second));
  }

  Dataset data;
  Vec3 ref = Vec3::Zero();
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::ostringstream name;
    name << std::setw(10) << std::setfill('0') << i << ".txt";
    const fs::path file = root / "data" / name.str();
    std::ifstream rec(file);
    if (!rec) throw InputError("missing OXTS record '" + file.string() + "'");
    std::vector<double> f;
    double value = 0.0;
    while (rec >> value) f.push_back(value);
    if (f.size() < 30) {
      throw InputError("short OXTS record '" + file.string() + "' (" + std::to_string(f.size()) +
                       " fields, expected 30)");
    }
    const double deg = std::numbers::pi / 180.0;
    const Vec3 lla(f[0] * deg, f[1] * deg, f[2]);
    if (i == 0) ref = lla;

    const double t = times[i];
    if (!data.imu.empty() && !(t > data.imu.back().t)) {
      throw InputError("timestamps.txt line " + std::to_string(i + 1) + " does not increase");
    }
    data.imu.push_back({t, Vec3(f[17], f[18], f[19]), Vec3(f[11], f[12], f[13])});
    TruthEntry e;
    e.t = t;
    e.x.R = so3::from_rpy(f[3], f[4], f[5]);
    e.x.v = Vec3(f[7], f[6], f[10]);
    e.x.p = i == 0 ? Vec3::Zero() : geodetic_to_enu(lla, ref);
    data.truth.push_back(e);
  }
  return data;
}

}  // namespace tfgsmooth
