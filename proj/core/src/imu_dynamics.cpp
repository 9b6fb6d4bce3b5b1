#include "tfgsmooth/imu_dynamics.hpp"

#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/so3.hpp"

namespace tfgsmooth {

TfgElement propagate(const TfgElement& x, const ImuSample& u, double dt, const Vec3& g) {
  TfgElement next;
  next.R = x.R * so3::exp(dt * (u.omega - x.bw));
  next.v = x.v + dt * (g + x.R * (u.accel - x.ba));
  next.p = x.p + dt * x.v;
  next.ba = x.ba;
  next.bw = x.bw;
  return next;
}

namespace {

// Shared (R, v, p) rows. `dt_acc` multiplies the rotation error in the
// velocity row; the gyro-bias coupling of the rotation row is added by the
// caller for the TFG kind only.
Mat15 navigation_rows(const Mat3& OmegaT, const Mat3& D, const Vec3& dt_acc, double dt) {
  Mat15 F = Mat15::Zero();
  F.block<3, 3>(kRot, kRot) = OmegaT;
  F.block<3, 3>(kRot, kBw) = -dt * D;
  F.block<3, 3>(kVel, kRot) = -OmegaT * so3::skew(dt_acc);
  F.block<3, 3>(kVel, kVel) = OmegaT;
  F.block<3, 3>(kVel, kBa) = -dt * OmegaT;
  F.block<3, 3>(kPos, kVel) = dt * OmegaT;
  F.block<3, 3>(kPos, kPos) = OmegaT;
  return F;
}

}  // namespace

Mat15 step_jacobian(Parametrization kind, const TfgElement& x, const ImuSample& u, double dt,
                    const Vec3& g) {
  const Vec3 theta = dt * (u.omega - x.bw);
  const Mat3 OmegaT = so3::exp(theta).transpose();
  // Right Jacobian of exp at theta.
  const Mat3 D = so3::dexp(-theta);

  switch (kind) {
    case Parametrization::kTfg: {
      // Body-frame biases rotate with the attitude error, which turns the
      // velocity coupling into the raw specific force and populates the
      // first block column of the bias rows.
      Mat15 F = navigation_rows(OmegaT, D, dt * u.accel, dt);
      const Mat3 Bw = so3::skew(x.bw);
      const Mat3 Ba = so3::skew(x.ba);
      const Mat3 rot_row = OmegaT - dt * D * Bw;
      F.block<3, 3>(kRot, kRot) = rot_row;
      const Mat3 residual_rot = Mat3::Identity() - rot_row;
      F.block<3, 3>(kBa, kRot) = Ba * residual_rot;
      F.block<3, 3>(kBa, kBa) = Mat3::Identity();
      F.block<3, 3>(kBa, kBw) = dt * Ba * D;
      F.block<3, 3>(kBw, kRot) = Bw * residual_rot;
      F.block<3, 3>(kBw, kBw) = Mat3::Identity() + dt * Bw * D;
      return F;
    }
    case Parametrization::kSe23: {
      Mat15 F = navigation_rows(OmegaT, D, dt * (u.accel - x.ba), dt);
      F.block<3, 3>(kBa, kBa) = Mat3::Identity();
      F.block<3, 3>(kBw, kBw) = Mat3::Identity();
      return F;
    }
    case Parametrization::kLinear: {
      // Same structure with the rotation increment and the bias-corrected
      // specific force recovered from the two estimates.
      const TfgElement next = propagate(x, u, dt, g);
      const Mat3 OmegaT_hat = next.R.transpose() * x.R;
      const Vec3 dt_acc_hat = x.R.transpose() * (next.v - x.v - dt * g);
      Mat15 F = navigation_rows(OmegaT_hat, D, dt_acc_hat, dt);
      F.block<3, 3>(kBa, kBa) = Mat3::Identity();
      F.block<3, 3>(kBw, kBw) = Mat3::Identity();
      return F;
    }
  }
  return Mat15::Identity();
}

Mat15 step_noise(double dt, const ProcessNoise& noise) {
  Mat15 Q = Mat15::Zero();
  const double dt2 = dt * dt;
  const double sa2 = noise.sigma_a * noise.sigma_a;
  Q.block<3, 3>(kRot, kRot).diagonal().setConstant(dt2 * noise.sigma_w * noise.sigma_w);
  Q.block<3, 3>(kVel, kVel).diagonal().setConstant(dt2 * sa2);
  Q.block<3, 3>(kPos, kPos).diagonal().setConstant(0.25 * dt2 * dt2 * sa2);
  Q.block<3, 3>(kBa, kBa).diagonal().setConstant(dt * noise.sigma_ba * noise.sigma_ba);
  Q.block<3, 3>(kBw, kBw).diagonal().setConstant(dt * noise.sigma_bw * noise.sigma_bw);
  return Q;
}

namespace {

double step_length(std::span<const ImuSample> samples, std::size_t k, double t_end) {
  const double next = k + 1 < samples.size() ? samples[k + 1].t : t_end;
  const double dt = next - samples[k].t;
  if (!(dt > 0.0)) {
    throw InputError("IMU timestamps must be strictly increasing (sample " + std::to_string(k) +
                     ", t=" + std::to_string(samples[k].t) + ")");
  }
  return dt;
}

StepTransition fold(Parametrization kind, const TfgElement& x0, std::span<const ImuSample> samples,
                    double t_end, const Vec3& g, const ProcessNoise* noise) {
  if (samples.empty()) throw InputError("compound: no IMU samples");
  StepTransition out;
  out.predicted = x0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double dt = step_length(samples, k, t_end);
    const Mat15 Fk = step_jacobian(kind, out.predicted, samples[k], dt, g);
    out.F = (Fk * out.F).eval();
    if (noise != nullptr) out.Q = (Fk * out.Q * Fk.transpose()).eval() + step_noise(dt, *noise);
    out.predicted = propagate(out.predicted, samples[k], dt, g);
    if ((k + 1) % kRenormalizeEvery == 0) out.predicted.R = so3::project(out.predicted.R);
  }
  out.Q = 0.5 * (out.Q + out.Q.transpose());
  return out;
}

}  // namespace

StepTransition compound(Parametrization kind, const TfgElement& x0,
                        std::span<const ImuSample> samples, double t_end, const Vec3& g,
                        const ProcessNoise& noise) {
  return fold(kind, x0, samples, t_end, g, &noise);
}

StepTransition compound_jacobian(Parametrization kind, const TfgElement& x0,
                                 std::span<const ImuSample> samples, double t_end, const Vec3& g) {
  return fold(kind, x0, samples, t_end, g, nullptr);
}

TfgElement propagate_stream(const TfgElement& x0, std::span<const ImuSample> samples,
                            double t_end, const Vec3& g) {
  TfgElement x = x0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    x = propagate(x, samples[k], step_length(samples, k, t_end), g);
    if ((k + 1) % kRenormalizeEvery == 0) x.R = so3::project(x.R);
  }
  return x;
}

}  // namespace tfgsmooth
