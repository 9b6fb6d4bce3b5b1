#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "tfgsmooth/imu_dynamics.hpp"
#include "tfgsmooth/tfg_group.hpp"

namespace tfgsmooth {

enum class MotionProfile { kStraight, kCircle, kFigureEight, kPiecewiseTurns };

std::string_view to_string(MotionProfile profile);
MotionProfile parse_motion_profile(std::string_view name);

/// Planar synthetic drive. imu_rate must be an integer multiple of gnss_rate.
struct TrajectorySpec {
  double duration = 60.0;  // s
  double imu_rate = 100.0;  // Hz
  double gnss_rate = 1.0;  // Hz
  MotionProfile profile = MotionProfile::kPiecewiseTurns;
  double speed = 10.0;  // m/s
  double turn_rate = 0.1;  // rad/s, circle profile only
  double initial_yaw = 0.0;  // rad, ignored by the figure-eight
  Vec3 true_ba = Vec3::Zero();
  Vec3 true_bw = Vec3::Zero();
  Vec3 gravity = kDefaultGravity;

  /// Throws InputError on non-positive or incommensurate rates.
  void validate() const;
};

/// Sensor noise used to synthesize data and the initial uncertainty handed
/// to the estimator. Attitude sigmas are in radians.
struct NoiseSpec {
  double sigma_y = 1.0;
  ProcessNoise process;
  double sigma_p0 = 1.0;
  double sigma_v0 = 10.0;
  double sigma_R0 = 1.7453292519943295;  // 100 deg
  double sigma_ba0 = 0.06;
  double sigma_bw0 = 0.07;
  std::uint64_t seed = 0;

  /// Data-side zero noise (initial sigmas untouched).
  static NoiseSpec noiseless();
};

struct GnssFix {
  double t = 0.0;
  Vec3 y = Vec3::Zero();
  double sigma = 1.0;
};

struct TruthEntry {
  double t = 0.0;
  TfgElement x;
};

struct Dataset {
  std::vector<ImuSample> imu;
  std::vector<GnssFix> gnss;
  std::vector<TruthEntry> truth;

  /// Throws InputError unless every stream is strictly time-ordered and
  /// every fix time has a truth entry (when truth is present).
  void validate() const;

  /// Truth entry at time t (to within 1e-9 s). Throws InputError if absent.
  const TruthEntry& truth_at(double t) const;

  /// IMU samples with t0 <= t < t1.
  std::vector<ImuSample> imu_between(double t0, double t1) const;
};

/// Integrates the profile with the discrete IMU model itself, so the
/// noiseless measurements reproduce the truth under propagate. Measurements
/// are the exact inputs plus bias plus white noise, fixes are truth
/// positions plus N(0, sigma_y^2 I). All randomness comes from one
/// generator seeded with noise.seed.
Dataset generate(const TrajectorySpec& spec, const NoiseSpec& noise);

/// Replaces the fixes by noisy truth positions at `rate` Hz (nearest truth
/// entry to each epoch).
void synthesize_gnss(Dataset& data, double rate, double sigma, std::uint64_t seed);

/// Comma-separated text, '#' comment lines. Rows:
///   IMU,t,wx,wy,wz,ax,ay,az
///   GNSS,t,px,py,pz,sigma
///   TRUTH,t,px,py,pz,qw,qx,qy,qz,vx,vy,vz[,bax,bay,baz,bwx,bwy,bwz]
/// Floats carry 17 significant digits.
void save_csv(const Dataset& data, std::ostream& out);
void save_csv(const Dataset& data, const std::filesystem::path& path);

/// Throws ParseError (with line number) on malformed rows and InputError
/// naming the line on non-monotonic time.
Dataset load_csv(std::istream& in);
Dataset load_csv(const std::filesystem::path& path);

/// Reads a KITTI raw OXTS directory (timestamps.txt plus data/NNNNNNNNNN.txt,
/// 30 whitespace-separated fields per record). Field indices used:
///   0-2 lat, lon (deg), alt (m); 3-5 roll, pitch, yaw (rad);
///   6-7 vn, ve; 10 vu (m/s); 11-13 ax, ay, az (m/s^2, body);
///   17-19 wx, wy, wz (rad/s, body).
/// Positions are expressed in an east-north-up tangent plane anchored at
/// the first fix. The result carries IMU and truth only; call
/// synthesize_gnss for fixes.
Dataset convert_kitti_oxts(const std::filesystem::path& dir);

/// WGS84 geodetic (rad, rad, m) to ENU relative to the reference point.
Vec3 geodetic_to_enu(const Vec3& lla, const Vec3& ref_lla);

}  // namespace tfgsmooth
