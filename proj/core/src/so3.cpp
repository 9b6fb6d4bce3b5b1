#include "tfgsmooth/so3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "tfgsmooth/errors.hpp"

namespace tfgsmooth::so3 {

namespace {

constexpr double kSmallAngle = 1e-6;
constexpr double kNearPi = std::numbers::pi - 1e-4;

}  // namespace

Mat3 skew(const Vec3& u) {
  Mat3 m;
  m << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
       -u.y(), u.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 exp(const Vec3& theta) {
  const double t2 = theta.squaredNorm();
  const double t = std::sqrt(t2);
  const Mat3 K = skew(theta);
  double a;  // sin(t)/t
  double b;  // (1 - cos t)/t^2
  if (t < kSmallAngle) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    const double s = std::sin(0.5 * t);
    a = std::sin(t) / t;
    b = 2.0 * s * s / t2;
  }
  return Mat3::Identity() + a * K + b * K * K;
}

Vec3 log(const Mat3& R) {
  if (!is_rotation(R, 1e-6)) {
    throw DomainError("so3::log: input is not a rotation matrix");
  }
  const Vec3 w = vee(R);  // sin(t) * axis
  const double s = w.norm();
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double t = std::atan2(s, c);

  if (t > kNearPi) {
    const Mat3 sym = 0.5 * (R + R.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
    Vec3 axis = es.eigenvectors().col(2);  // eigenvalues sorted ascending
    if (axis.dot(w) < 0.0) axis = -axis;
    return t * axis.normalized();
  }
  if (s < kSmallAngle) {
    // t/sin(t) ~= 1 + t^2/6 + 7 t^4/360
    const double t2 = t * t;
    return (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * w;
  }
  return (t / s) * w;
}

Mat3 dexp(const Vec3& theta) {
  const double t2 = theta.squaredNorm();
  const double t = std::sqrt(t2);
  const Mat3 K = skew(theta);
  double a;  // (1 - cos t)/t^2
  double b;  // (t - sin t)/t^3
  if (t < kSmallAngle) {
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    const double s = std::sin(0.5 * t);
    a = 2.0 * s * s / t2;
    b = (t - std::sin(t)) / (t2 * t);
  }
  return Mat3::Identity() + a * K + b * K * K;
}

Mat3 dexp_inv(const Vec3& theta) {
  const double t2 = theta.squaredNorm();
  const double t = std::sqrt(t2);
  const Mat3 K = skew(theta);
  double c;  // 1/t^2 - (1 + cos t)/(2 t sin t)
  if (t < kSmallAngle) {
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    c = (1.0 - 0.5 * t / std::tan(0.5 * t)) / t2;
  }
  return Mat3::Identity() - 0.5 * K + c * K * K;
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).norm();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Mat3 project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) = -U.col(2);
  return U * V.transpose();
}

Mat3 rot_z(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 R;
  R << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return R;
}

Mat3 from_rpy(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  Mat3 Rx, Ry;
  Rx << 1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr;
  Ry << cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp;
  return rot_z(yaw) * Ry * Rx;
}

Vec3 to_rpy(const Mat3& R) {
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  const double roll = std::atan2(R(2, 1), R(2, 2));
  const double yaw = std::atan2(R(1, 0), R(0, 0));
  return {roll, pitch, yaw};
}

}  // namespace tfgsmooth::so3
