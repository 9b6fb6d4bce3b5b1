#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "test_support.hpp"
#include "tfgsmooth/errors.hpp"
#include "tfgsmooth/parametrization.hpp"

namespace tfgsmooth {
namespace {

using testing::max_abs;
using testing::max_abs_diff;
using testing::Sampler;

Mat15 random_spd(Sampler& s) {
  Eigen::Matrix<double, 15, 15> A;
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 15; ++j) A(i, j) = s.normal();
  return A * A.transpose() + 0.5 * Mat15::Identity();
}

TEST(Parametrization, NamesRoundTrip) {
  for (auto kind : kAllParametrizations) EXPECT_EQ(parse_parametrization(to_string(kind)), kind);
  EXPECT_THROW(parse_parametrization("se3"), InputError);
}

TEST(Retract, ZeroIsIdentityForEveryKind) {
  Sampler s(30);
  const TfgElement x = s.element();
  for (auto kind : kAllParametrizations) {
    EXPECT_EQ(max_abs_diff(retract(kind, x, Tangent::Zero()), x), 0.0) << to_string(kind);
  }
}

TEST(Retract, LinearAtIdentityAttitudeAddsDirectly) {
  Sampler s(31);
  TfgElement x = s.element();
  x.R.setIdentity();
  const Tangent d = s.tangent();
  const TfgElement y = retract(Parametrization::kLinear, x, d);
  EXPECT_EQ(y.v, x.v + d.segment<3>(kVel));
  EXPECT_EQ(y.p, x.p + d.segment<3>(kPos));
  EXPECT_EQ(y.ba, x.ba + d.segment<3>(kBa));
}

TEST(Retract, TfgIsRightComposition) {
  Sampler s(32);
  const TfgElement x = s.element();
  const Tangent d = s.tangent(0.5);
  EXPECT_LT(max_abs_diff(retract(Parametrization::kTfg, x, d), tfg::compose(x, tfg::exp(d))), 1e-15);
}

TEST(Se23, ExpMatchesMatrixExponential) {
  Sampler s(33);
  for (int i = 0; i < 100; ++i) {
    Vec9 xi;
    xi << s.axis_angle(3.0), s.vec3(), s.vec3();
    const Eigen::MatrixXd oracle = testing::scaled_series_exp(se23::hat(xi));
    EXPECT_LT(max_abs(oracle - se23::to_matrix(se23::exp(xi))), 1e-12);
    EXPECT_LT((se23::log(se23::exp(xi)) - xi).norm(), 1e-10);
  }
}

TEST(LocalCoordinates, ZeroAtReference) {
  Sampler s(34);
  const TfgElement x = s.element();
  for (auto kind : kAllParametrizations) {
    EXPECT_LT(local_coordinates(kind, x, x).norm(), 1e-15) << to_string(kind);
  }
}

TEST(LocalCoordinates, InvertsRetract) {
  Sampler s(35);
  for (auto kind : kAllParametrizations) {
    for (int i = 0; i < 1000; ++i) {
      const TfgElement ref = s.element();
      const TfgElement x = retract(Parametrization::kTfg, ref, s.tangent(0.3));
      const Tangent xi = local_coordinates(kind, ref, x);
      EXPECT_LT(max_abs_diff(retract(kind, ref, xi), x), 1e-9) << to_string(kind);
    }
  }
}

TEST(LocalCoordinates, TfgIsLogOfRelativeElement) {
  Sampler s(36);
  const TfgElement a = s.element(), b = retract(Parametrization::kTfg, a, s.tangent(0.4));
  EXPECT_EQ(local_coordinates(Parametrization::kTfg, a, b),
            tfg::log(tfg::compose(tfg::inverse(a), b)));
}

TEST(LocalCoordinates, BranchCut) {
  TfgElement a, b;
  b.R = so3::exp(Vec3(std::numbers::pi - 1e-8, 0, 0));
  for (auto kind : kAllParametrizations) {
    EXPECT_THROW(local_coordinates(kind, a, b), DomainError) << to_string(kind);
  }
}

TEST(AnchorAtOffset, ReproducesOffset) {
  Sampler s(37);
  for (auto kind : kAllParametrizations) {
    for (int i = 0; i < 100; ++i) {
      const TfgElement x = s.element();
      const Tangent off = s.tangent(0.5);
      const Tangent back = local_coordinates(kind, anchor_at_offset(kind, x, off), x);
      EXPECT_LT((back - off).norm(), 1e-10) << to_string(kind);
    }
  }
}

// Slope of log10 |SE23 - LINEAR| against log10 t.
double discrepancy_slope(Sampler& s) {
  const TfgElement x = s.element();
  const Tangent d = s.tangent().normalized();
  std::vector<double> lx, ly;
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const Tangent a = local_coordinates(Parametrization::kSe23, x,
                                        retract(Parametrization::kSe23, x, t * d));
    const Tangent b = local_coordinates(Parametrization::kSe23, x,
                                        retract(Parametrization::kLinear, x, t * d));
    lx.push_back(std::log10(t));
    ly.push_back(std::log10((a - b).norm()));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

TEST(Retract, LinearAndSe23AgreeToFirstOrder) {
  Sampler s(38);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(discrepancy_slope(s), 2.0, 0.1);
}

TEST(PriorWeight, ZeroResidualKeepsCovariance) {
  Sampler s(39);
  const Mat15 P0 = random_spd(s);
  for (auto kind : kAllParametrizations) {
    EXPECT_LT(max_abs(prior_weight(kind, Tangent::Zero(), P0) - P0), 1e-12 * max_abs(P0));
  }
}

TEST(PriorWeight, RotationOnlyResidualUsesDexpCongruence) {
  Sampler s(40);
  const Mat15 P0 = random_spd(s);
  Tangent p0 = Tangent::Zero();
  p0.head<3>() = s.axis_angle(1.5);
  const Mat15 W = prior_weight(Parametrization::kTfg, p0, P0);
  const Mat3 Ji = so3::dexp(p0.head<3>()).inverse();
  const Mat3 expected = Ji * P0.topLeftCorner<3, 3>() * Ji.transpose();
  EXPECT_LT(max_abs(W.topLeftCorner<3, 3>() - expected), 1e-10);
  EXPECT_LT(max_abs(prior_weight(Parametrization::kLinear, p0, P0) - P0), 1e-12);
}

TEST(PriorWeight, SymmetricPositiveDefinite) {
  Sampler s(41);
  for (auto kind : kAllParametrizations) {
    for (int i = 0; i < 50; ++i) {
      Tangent p0 = s.tangent();
      p0.head<3>() = s.axis_angle(2.0);
      const Mat15 W = prior_weight(kind, p0, random_spd(s));
      EXPECT_LT(max_abs(W - W.transpose()), 1e-12 * max_abs(W));
      EXPECT_EQ(Eigen::LLT<Mat15>(W).info(), Eigen::Success);
    }
  }
}

TEST(PriorWeight, RejectsIndefiniteCovariance) {
  Mat15 P0 = Mat15::Identity();
  P0(4, 4) = -1.0;
  EXPECT_THROW(prior_weight(Parametrization::kTfg, Tangent::Zero(), P0), NumericalError);
}

TEST(PriorJacobian, Se23BiasBlockIsIdentity) {
  Sampler s(42);
  const Tangent p0 = s.tangent();
  const Mat15 J = prior_jacobian(Parametrization::kSe23, p0);
  EXPECT_TRUE((J.bottomRightCorner<6, 6>().isIdentity(0.0)));
  EXPECT_TRUE((J.topRightCorner<9, 6>().isZero(0.0)));
  EXPECT_EQ(prior_jacobian(Parametrization::kLinear, p0), Mat15::Identity());
}

}  // namespace
}  // namespace tfgsmooth
