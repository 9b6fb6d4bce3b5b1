#include "tfgsmooth/tfg_group.hpp"

#include <numbers>

#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/so3.hpp"

namespace tfgsmooth::tfg {

TfgElement compose(const TfgElement& a, const TfgElement& b) {
  const Mat3 RbT = b.R.transpose();
  return {a.R * b.R, a.v + a.R * b.v, a.p + a.R * b.p, b.ba + RbT * a.ba, b.bw + RbT * a.bw};
}

TfgElement inverse(const TfgElement& x) {
  const Mat3 RT = x.R.transpose();
  return {RT, -RT * x.v, -RT * x.p, -x.R * x.ba, -x.R * x.bw};
}

TfgElement exp(const Tangent& xi) {
  const Vec3 phi = xi.segment<3>(kRot);
  const Mat3 nu = so3::dexp(phi);
  const Mat3 nu_neg = so3::dexp(-phi);
  return {so3::exp(phi), nu * xi.segment<3>(kVel), nu * xi.segment<3>(kPos),
          nu_neg * xi.segment<3>(kBa), nu_neg * xi.segment<3>(kBw)};
}

Tangent log(const TfgElement& x) {
  const Vec3 phi = so3::log(x.R);
  if (phi.norm() >= std::numbers::pi - 1e-6) {
    throw DomainError("tfg::log: rotation angle at the branch cut");
  }
  const Mat3 nu_inv = so3::dexp_inv(phi);
  const Mat3 nu_neg_inv = so3::dexp_inv(-phi);
  Tangent xi;
  xi << phi, nu_inv * x.v, nu_inv * x.p, nu_neg_inv * x.ba, nu_neg_inv * x.bw;
  return xi;
}

Mat15 adjoint(const TfgElement& x) {
  Mat15 A = Mat15::Zero();
  for (int k = 0; k < 5; ++k) A.block<3, 3>(3 * k, 3 * k) = x.R;
  A.block<3, 3>(kVel, kRot) = so3::skew(x.v) * x.R;
  A.block<3, 3>(kPos, kRot) = so3::skew(x.p) * x.R;
  A.block<3, 3>(kBa, kRot) = x.R * so3::skew(x.ba);
  A.block<3, 3>(kBw, kRot) = x.R * so3::skew(x.bw);
  return A;
}

Mat15 ad(const Tangent& xi) {
  Mat15 A = Mat15::Zero();
  const Mat3 K = so3::skew(xi.segment<3>(kRot));
  for (int k = 0; k < 5; ++k) A.block<3, 3>(3 * k, 3 * k) = K;
  for (int k = 1; k < 5; ++k) A.block<3, 3>(3 * k, kRot) = so3::skew(xi.segment<3>(3 * k));
  return A;
}

Mat15 left_jacobian(const Tangent& xi) {
  const Mat15 A = ad(xi);
  Mat15 J = Mat15::Identity();
  Mat15 term = Mat15::Identity();
  for (int j = 1; j <= 30; ++j) {
    term = term * A / static_cast<double>(j + 1);
    J += term;
    if (term.norm() < 1e-14) break;
  }
  return J;
}

TfgElement compose_imperfect(const TfgElement& a, const TfgElement& b) {
  return {a.R * b.R, a.v + a.R * b.v, a.p + a.R * b.p, a.ba + b.ba, a.bw + b.bw};
}

}  // namespace tfgsmooth::tfg
