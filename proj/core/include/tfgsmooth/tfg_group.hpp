#pragma once

#include "tfgsmooth/types.hpp"

namespace tfgsmooth {

/// Navigation state with both IMU biases.
///
/// R maps body to earth; v and p are earth-frame; ba and bw are body-frame.
/// Under the two-frames group law the body-frame biases are rotated by the
/// right operand's attitude when composing.
struct TfgElement {
  Mat3 R = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  Vec3 bw = Vec3::Zero();

  static TfgElement identity() { return {}; }
};

namespace tfg {

TfgElement compose(const TfgElement& a, const TfgElement& b);
TfgElement inverse(const TfgElement& x);

/// (exp R, nu(xR) xv, nu(xR) xp, nu(-xR) xba, nu(-xR) xbw)
TfgElement exp(const Tangent& xi);

/// Inverse of exp. Throws DomainError when the rotation angle is at or
/// above pi - 1e-6.
Tangent log(const TfgElement& x);

/// Ad_x with x exp(xi) x^-1 = exp(Ad_x xi).
Mat15 adjoint(const TfgElement& x);

/// ad_xi, satisfying exp_m(ad_xi) = Ad_{exp(xi)}.
Mat15 ad(const Tangent& xi);

/// Left Jacobian sum_j ad^j / (j+1)!, truncated once a term drops below
/// 1e-14 (Frobenius) or after 30 terms. exp(xi + d) ~= exp(J d) exp(xi).
Mat15 left_jacobian(const Tangent& xi);

/// SE2(3) x R^6 law where biases simply add.
TfgElement compose_imperfect(const TfgElement& a, const TfgElement& b);

}  // namespace tfg
}  // namespace tfgsmooth
