#pragma once

#include <span>

#include "tfgsmooth/parametrization.hpp"
#include "tfgsmooth/tfg_group.hpp"

namespace tfgsmooth {

/// Gyro rate (rad/s) and specific force (m/s^2), both in the body frame.
struct ImuSample {
  double t = 0.0;
  Vec3 omega = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

/// White-noise densities of the discrete IMU model. Bias random walks are
/// per unit time and get scaled by dt.
struct ProcessNoise {
  double sigma_a = 0.05;    // m/s^2
  double sigma_w = 0.01;    // rad/s
  double sigma_ba = 0.002;  // m/s^2 per sqrt(s)
  double sigma_bw = 3e-5;   // rad/s per sqrt(s)
};

/// Linearized transition between two smoother states: the predicted state,
/// its error Jacobian in the active parametrization, and the accumulated
/// process covariance.
struct StepTransition {
  Mat15 F = Mat15::Identity();
  Mat15 Q = Mat15::Zero();
  TfgElement predicted;
};

inline const Vec3 kDefaultGravity{0.0, 0.0, -9.81};

/// Rotation is re-projected onto SO(3) after this many chained steps.
inline constexpr int kRenormalizeEvery = 1000;

/// One forward-Euler step of the biased IMU model:
///   R+ = R exp(dt (w - bw)),  v+ = v + dt (g + R (a - ba)),  p+ = p + dt v.
TfgElement propagate(const TfgElement& x, const ImuSample& u, double dt, const Vec3& g);

/// F with local(kind, f(x), f(retract(kind, x, xi))) = F xi + O(|xi|^2).
Mat15 step_jacobian(Parametrization kind, const TfgElement& x, const ImuSample& u, double dt,
                    const Vec3& g);

/// Block-diagonal per-step covariance.
Mat15 step_noise(double dt, const ProcessNoise& noise);

/// Chains the samples into one transition. Sample k is applied over
/// [t_k, t_{k+1}) with the last one running until t_end. Throws InputError
/// on empty input or non-increasing timestamps.
StepTransition compound(Parametrization kind, const TfgElement& x0,
                        std::span<const ImuSample> samples, double t_end, const Vec3& g,
                        const ProcessNoise& noise);

/// compound without the covariance fold (Q is left zero).
StepTransition compound_jacobian(Parametrization kind, const TfgElement& x0,
                                 std::span<const ImuSample> samples, double t_end, const Vec3& g);

/// Propagation only, same timing convention and renormalization policy as
/// compound.
TfgElement propagate_stream(const TfgElement& x0, std::span<const ImuSample> samples,
                            double t_end, const Vec3& g);

}  // namespace tfgsmooth
