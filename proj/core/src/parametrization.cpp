#include "tfgsmooth/parametrization.hpp"

#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/so3.hpp"

namespace tfgsmooth {

std::string_view to_string(Parametrization kind) {
  switch (kind) {
    case Parametrization::kTfg:
      return "tfg";
    case Parametrization::kSe23:
      return "se23";
    case Parametrization::kLinear:
      return "linear";
  }
  return "unknown";
}

Parametrization parse_parametrization(std::string_view name) {
  if (name == "tfg") return Parametrization::kTfg;
  if (name == "se23") return Parametrization::kSe23;
  if (name == "linear") return Parametrization::kLinear;
  throw InputError("unknown parametrization '" + std::string(name) + "'");
}

namespace se23 {

NavState compose(const NavState& a, const NavState& b) {
  return {a.R * b.R, a.v + a.R * b.v, a.p + a.R * b.p};
}

NavState inverse(const NavState& x) {
  const Mat3 RT = x.R.transpose();
  return {RT, -RT * x.v, -RT * x.p};
}

NavState exp(const Vec9& xi) {
  const Vec3 phi = xi.segment<3>(0);
  const Mat3 nu = so3::dexp(phi);
  return {so3::exp(phi), nu * xi.segment<3>(3), nu * xi.segment<3>(6)};
}

Vec9 log(const NavState& x) {
  const Vec3 phi = so3::log(x.R);
  if (phi.norm() >= std::numbers::pi - 1e-6) {
    throw DomainError("se23::log: rotation angle at the branch cut");
  }
  const Mat3 nu_inv = so3::dexp_inv(phi);
  Vec9 xi;
  xi << phi, nu_inv * x.v, nu_inv * x.p;
  return xi;
}

Eigen::Matrix<double, 5, 5> to_matrix(const NavState& x) {
  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Identity();
  m.block<3, 3>(0, 0) = x.R;
  m.block<3, 1>(0, 3) = x.v;
  m.block<3, 1>(0, 4) = x.p;
  return m;
}

Eigen::Matrix<double, 5, 5> hat(const Vec9& xi) {
  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
  m.block<3, 3>(0, 0) = so3::skew(xi.segment<3>(0));
  m.block<3, 1>(0, 3) = xi.segment<3>(3);
  m.block<3, 1>(0, 4) = xi.segment<3>(6);
  return m;
}

}  // namespace se23

namespace {

se23::NavState nav_of(const TfgElement& x) { return {x.R, x.v, x.p}; }

Vec9 nav_part(const Tangent& xi) { return xi.head<9>(); }

}  // namespace

TfgElement retract(Parametrization kind, const TfgElement& x, const Tangent& xi) {
  switch (kind) {
    case Parametrization::kTfg:
      return tfg::compose(x, tfg::exp(xi));
    case Parametrization::kSe23: {
      const se23::NavState n = se23::compose(nav_of(x), se23::exp(nav_part(xi)));
      return {n.R, n.v, n.p, x.ba + xi.segment<3>(kBa), x.bw + xi.segment<3>(kBw)};
    }
    case Parametrization::kLinear:
      return {x.R * so3::exp(xi.segment<3>(kRot)), x.v + x.R * xi.segment<3>(kVel),
              x.p + x.R * xi.segment<3>(kPos), x.ba + xi.segment<3>(kBa),
              x.bw + xi.segment<3>(kBw)};
  }
  return x;
}

Tangent local_coordinates(Parametrization kind, const TfgElement& ref, const TfgElement& x) {
  Tangent xi;
  switch (kind) {
    case Parametrization::kTfg:
      return tfg::log(tfg::compose(tfg::inverse(ref), x));
    case Parametrization::kSe23:
      xi << se23::log(se23::compose(se23::inverse(nav_of(ref)), nav_of(x))), x.ba - ref.ba,
          x.bw - ref.bw;
      return xi;
    case Parametrization::kLinear: {
      const Mat3 RT = ref.R.transpose();
      const Vec3 phi = so3::log(RT * x.R);
      if (phi.norm() >= std::numbers::pi - 1e-6) {
        throw DomainError("local_coordinates: rotation discrepancy at the branch cut");
      }
      xi << phi, RT * (x.v - ref.v), RT * (x.p - ref.p), x.ba - ref.ba, x.bw - ref.bw;
      return xi;
    }
  }
  return Tangent::Zero();
}

TfgElement anchor_at_offset(Parametrization kind, const TfgElement& x, const Tangent& offset) {
  if (kind != Parametrization::kLinear) return retract(kind, x, -offset);
  // Linear kind expresses differences in the anchor's frame, so the rotation
  // has to be solved for first.
  TfgElement a;
  a.R = x.R * so3::exp(-offset.segment<3>(kRot));
  a.v = x.v - a.R * offset.segment<3>(kVel);
  a.p = x.p - a.R * offset.segment<3>(kPos);
  a.ba = x.ba - offset.segment<3>(kBa);
  a.bw = x.bw - offset.segment<3>(kBw);
  return a;
}

Mat15 prior_jacobian(Parametrization kind, const Tangent& p0) {
  switch (kind) {
    case Parametrization::kTfg:
      return tfg::left_jacobian(p0);
    case Parametrization::kSe23: {
      // ad_tfg restricted to (R, v, p) is ad_se23, and that block never
      // couples to the bias rows, so the nav block of the TFG series is the
      // SE2(3) left Jacobian.
      Tangent nav = Tangent::Zero();
      nav.head<9>() = p0.head<9>();
      Mat15 J = Mat15::Identity();
      J.topLeftCorner<9, 9>() = tfg::left_jacobian(nav).topLeftCorner<9, 9>();
      return J;
    }
    case Parametrization::kLinear:
      return Mat15::Identity();
  }
  return Mat15::Identity();
}

Mat15 prior_weight(Parametrization kind, const Tangent& p0, const Mat15& P0) {
  if ((P0 - P0.transpose()).norm() > 1e-9 * (1.0 + P0.norm())) {
    throw NumericalError("prior_weight: P0 is not symmetric");
  }
  if (Eigen::LLT<Mat15>(P0).info() != Eigen::Success) {
    throw NumericalError("prior_weight: P0 is not positive definite");
  }
  if (kind == Parametrization::kLinear) return P0;
  const Eigen::FullPivLU<Mat15> lu(prior_jacobian(kind, p0));
  if (!lu.isInvertible()) throw NumericalError("prior_weight: singular left Jacobian");
  const Mat15 Jinv = lu.inverse();
  const Mat15 W = Jinv * P0 * Jinv.transpose();
  return 0.5 * (W + W.transpose());
}

}  // namespace tfgsmooth
