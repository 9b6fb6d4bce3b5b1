#pragma once

#include <array>
#include <string>
#include <string_view>

#include "tfgsmooth/tfg_group.hpp"

namespace tfgsmooth {

/// State update maps compared by the smoother.
///   kTfg    x <- x . exp_tfg(xi)
///   kSe23   (R, v, p) <- (R, v, p) exp_se23(xi_nav),  b <- b + xi_b
///   kLinear (R exp(dR), v + R dv, p + R dp, b + db)
enum class Parametrization { kTfg, kSe23, kLinear };

inline constexpr std::array<Parametrization, 3> kAllParametrizations = {
    Parametrization::kTfg, Parametrization::kSe23, Parametrization::kLinear};

/// "tfg", "se23" or "linear".
std::string_view to_string(Parametrization kind);

/// Throws InputError for unknown names.
Parametrization parse_parametrization(std::string_view name);

TfgElement retract(Parametrization kind, const TfgElement& x, const Tangent& xi);

/// Inverse of retract: retract(kind, ref, local_coordinates(kind, ref, x)) == x.
/// Throws DomainError if the rotation discrepancy reaches pi.
Tangent local_coordinates(Parametrization kind, const TfgElement& ref, const TfgElement& x);

/// The state whose local coordinates at x equal `offset`:
/// local_coordinates(kind, anchor_at_offset(kind, x, offset), x) == offset.
TfgElement anchor_at_offset(Parametrization kind, const TfgElement& x, const Tangent& offset);

/// Jacobian J(p0) of the prior residual: the TFG left Jacobian, the SE2(3)
/// left Jacobian on the navigation block with identity on the biases, or
/// identity for the linear kind.
Mat15 prior_jacobian(Parametrization kind, const Tangent& p0);

/// J(p0)^-1 P0 J(p0)^-T. Throws NumericalError if J is singular or P0 is
/// not symmetric positive definite.
Mat15 prior_weight(Parametrization kind, const Tangent& p0, const Mat15& P0);

namespace se23 {

struct NavState {
  Mat3 R = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();
};

NavState compose(const NavState& a, const NavState& b);
NavState inverse(const NavState& x);
NavState exp(const Vec9& xi);
Vec9 log(const NavState& x);

/// 5x5 homogeneous embedding [[R, v, p], [0, 1, 0], [0, 0, 1]].
Eigen::Matrix<double, 5, 5> to_matrix(const NavState& x);
/// Lie algebra element [[xR]x, xv, xp], [0 0 0]] as a 5x5 matrix.
Eigen::Matrix<double, 5, 5> hat(const Vec9& xi);

}  // namespace se23
}  // namespace tfgsmooth
