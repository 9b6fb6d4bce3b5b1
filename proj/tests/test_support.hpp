#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>

#include "tfgsmooth/imu_dynamics.hpp"
#include "tfgsmooth/so3.hpp"
#include "tfgsmooth/tfg_group.hpp"

namespace tfgsmooth::testing {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return normal_(rng_); }

  Vec3 vec3(double scale = 1.0) { return scale * Vec3(normal(), normal(), normal()); }
  Tangent tangent(double scale = 1.0) {
    Tangent t;
    for (int i = 0; i < t.size(); ++i) t(i) = scale * normal();
    return t;
  }

  /// Unit axis times an angle uniform in [0, max_angle).
  Vec3 axis_angle(double max_angle) {
    Vec3 axis = vec3();
    axis.normalize();
    return uniform(0.0, max_angle) * axis;
  }

  Mat3 rotation(double max_angle = 3.0) { return so3::exp(axis_angle(max_angle)); }

  TfgElement element(double scale = 1.0) {
    TfgElement x;
    x.R = rotation();
    x.v = vec3(scale);
    x.p = vec3(scale);
    x.ba = vec3(0.1 * scale);
    x.bw = vec3(0.05 * scale);
    return x;
  }

  ImuSample imu(double t = 0.0) { return {t, vec3(0.5), Vec3(0.0, 0.0, 9.81) + vec3(1.0)}; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

inline double max_abs_diff(const TfgElement& a, const TfgElement& b) {
  double d = (a.R - b.R).cwiseAbs().maxCoeff();
  d = std::max(d, (a.v - b.v).cwiseAbs().maxCoeff());
  d = std::max(d, (a.p - b.p).cwiseAbs().maxCoeff());
  d = std::max(d, (a.ba - b.ba).cwiseAbs().maxCoeff());
  d = std::max(d, (a.bw - b.bw).cwiseAbs().maxCoeff());
  return d;
}

/// Central differences of f: R^n -> R^m at zero.
inline Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                          int n, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(Eigen::VectorXd::Zero(n));
  Eigen::MatrixXd J(f0.size(), n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = h;
    J.col(j) = (f(e) - f(-e)) / (2.0 * h);
  }
  return J;
}

/// Truncated power series of the matrix exponential.
inline Eigen::MatrixXd series_exp(const Eigen::MatrixXd& A, int terms = 40) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k < terms; ++k) {
    term = (term * A / static_cast<double>(k)).eval();
    sum += term;
  }
  return sum;
}

/// exp for matrices with larger norm: scale, series, square.
inline Eigen::MatrixXd scaled_series_exp(const Eigen::MatrixXd& A) {
  int squarings = 0;
  double norm = A.norm();
  while (norm > 0.25) {
    norm /= 2.0;
    ++squarings;
  }
  Eigen::MatrixXd E = series_exp(A / std::pow(2.0, squarings), 30);
  for (int i = 0; i < squarings; ++i) E = (E * E).eval();
  return E;
}

}  // namespace tfgsmooth::testing
