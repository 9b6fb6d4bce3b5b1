#pragma once

#include "tfgsmooth/types.hpp"

namespace tfgsmooth::so3 {

/// Matrix of the cross product: skew(u) * w == u.cross(w).
Mat3 skew(const Vec3& u);

/// Inverse of skew on the skew-symmetric part of m.
Vec3 vee(const Mat3& m);

/// Rodrigues' formula. Below 1e-6 rad a 4th-order Taylor expansion is used.
Mat3 exp(const Vec3& theta);

/// Principal logarithm, result has norm <= pi.
///
/// Throws DomainError when R is not a rotation to within 1e-6. For angles
/// above pi - 1e-4 the axis is taken from the dominant eigenvector of the
/// symmetric part, where the skew part carries too little signal.
Vec3 log(const Mat3& R);

/// Left Jacobian of exp, the nu map
///   I + (1 - cos t)/t^2 [theta]x + (t - sin t)/t^3 [theta]x^2.
/// exp(theta + d) ~= exp(dexp(theta) d) * exp(theta). The right Jacobian is
/// dexp(-theta).
Mat3 dexp(const Vec3& theta);

/// Inverse of dexp, valid for |theta| < 2 pi.
Mat3 dexp_inv(const Vec3& theta);

/// Rotation test: |R^T R - I|_F and |det R - 1| both within tol.
bool is_rotation(const Mat3& R, double tol = 1e-12);

/// Nearest rotation in Frobenius norm (polar projection).
Mat3 project(const Mat3& m);

/// Rotation about the earth z axis.
Mat3 rot_z(double yaw);

/// ZYX Euler decomposition R = Rz(yaw) Ry(pitch) Rx(roll); returns
/// (roll, pitch, yaw).
Vec3 to_rpy(const Mat3& R);
Mat3 from_rpy(double roll, double pitch, double yaw);

}  // namespace tfgsmooth::so3
