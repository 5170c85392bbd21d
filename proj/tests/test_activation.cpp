#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "gnk/activation.hpp"
#include "gnk/errors.hpp"

using namespace gnk;
using namespace gnk::test;

namespace {

Mat two_by_two(double a, double b, double c) {
  Mat S(2, 2);
  S << a, b, b, c;
  return S;
}

std::vector<Activation> closed_forms() {
  return {Activation::relu(), Activation::leaky(0.2), Activation::erf(), Activation::identity()};
}

}  // namespace

TEST(Dual, ReluPerfectlyCorrelated) {
  const Mat S = two_by_two(1, 1, 1);
  EXPECT_LT(max_abs(dual_activation(Activation::relu(), S) - Mat::Constant(2, 2, 0.5)), 1e-15);
  EXPECT_LT(max_abs(dual_activation_derivative(Activation::relu(), S) - Mat::Constant(2, 2, 0.5)), 1e-15);
}

TEST(Dual, ReluIndependent) {
  const Mat S = Mat::Identity(2, 2);
  EXPECT_NEAR(dual_activation(Activation::relu(), S)(0, 1), 1.0 / (2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(dual_activation_derivative(Activation::relu(), S)(0, 1), 0.25, 1e-15);
}

TEST(Dual, ReluIndependentAgainstSampling) {
  const Mat mc = mc_dual_oracle(Activation::relu(), Mat::Identity(2, 2), 10'000'000, 7, false);
  EXPECT_NEAR(mc(0, 1), 1.0 / (2.0 * std::numbers::pi), 1e-3);
}

TEST(Dual, Identity) {
  const Mat S = random_psd(5, 3);
  EXPECT_LT(max_abs(dual_activation(Activation::identity(), S) - S), 1e-15);
  EXPECT_EQ(dual_activation_derivative(Activation::identity(), S), Mat::Ones(5, 5));
}

TEST(Dual, ErfClosedForm) {
  const Mat S = two_by_two(1.0, 0.3, 2.0);
  const double expect = 2.0 / std::numbers::pi * std::asin(2 * 0.3 / std::sqrt(3.0 * 5.0));
  EXPECT_NEAR(dual_activation(Activation::erf(), S)(0, 1), expect, 1e-15);
}

TEST(Dual, LeakyReducesToLinearAtSlopeOne) {
  const Mat S = random_psd(4, 11);
  EXPECT_LT(max_abs(dual_activation(Activation::leaky(1.0), S) - S), 1e-12);
}

TEST(Dual, ZeroVarianceRow) {
  Mat S = random_psd(3, 2);
  S.row(1).setZero();
  S.col(1).setZero();
  for (const auto& act : {Activation::relu(), Activation::erf(), Activation::leaky(0.2)}) {
    const Mat D = dual_activation(act, S);
    EXPECT_EQ(D.row(1).cwiseAbs().maxCoeff(), 0.0) << act.name();
    EXPECT_TRUE(D.allFinite());
  }
  const Mat Dd = dual_activation_derivative(Activation::relu(), S);
  EXPECT_EQ(Dd(1, 1), 0.0);
  EXPECT_EQ(Dd(0, 1), 0.0);
}

TEST(Dual, Errors) {
  EXPECT_THROW(dual_activation(Activation::relu(), two_by_two(1, 2, 1)), NumericalError);
  EXPECT_THROW(dual_activation(Activation::relu(), two_by_two(-1, 0, 1)), NumericalError);
  EXPECT_THROW(dual_activation(Activation::sigmoid(), Mat::Identity(2, 2)), ValidationError);
  EXPECT_THROW(mc_dual_oracle(Activation::relu(), Mat::Identity(2, 2), 0, 0, false), Error);
}

TEST(Dual, Parse) {
  EXPECT_EQ(parse_activation("relu").kind, ActKind::relu);
  EXPECT_DOUBLE_EQ(parse_activation("leaky_relu:0.1").alpha, 0.1);
  EXPECT_DOUBLE_EQ(parse_activation("leaky_relu").alpha, 0.2);
  EXPECT_THROW(parse_activation("tanhh"), ValidationError);
}

TEST(Oracle, IdentityUnbiased) {
  const Mat S = two_by_two(2, 1, 2);
  const Mat mc = mc_dual_oracle(Activation::identity(), S, 1'000'000, 3, false);
  EXPECT_LT(max_abs(mc - S), 5e-3 * S.cwiseAbs().rowwise().sum().maxCoeff());
}

TEST(Oracle, Deterministic) {
  const Mat S = random_psd(3, 9);
  EXPECT_EQ(mc_dual_oracle(Activation::erf(), S, 1000, 5, false), mc_dual_oracle(Activation::erf(), S, 1000, 5, false));
}

// 1e6 draws per matrix; 12 matrices per activation keeps the run short on one core.
TEST(DualProperty, MatchesSamplingOracle) {
  int trial = 0;
  for (const auto& act : closed_forms()) {
    for (int k = 0; k < 12; ++k, ++trial) {
      const int n = 2 + k % 5;
      const Mat S = random_psd(n, 1000 + trial, 0.5 + 0.25 * (k % 4));
      const double tol = 5e-3 * std::max(1.0, S.cwiseAbs().rowwise().sum().maxCoeff());
      const Mat mc = mc_dual_oracle(act, S, 1'000'000, 77 + trial, false);
      EXPECT_LT(max_abs(dual_activation(act, S) - mc), tol) << act.name() << " n=" << n;
      const Mat mcd = mc_dual_oracle(act, S, 1'000'000, 177 + trial, true);
      EXPECT_LT(max_abs(dual_activation_derivative(act, S) - mcd), tol) << act.name() << " derivative n=" << n;
    }
  }
}

TEST(DualProperty, PsdSymmetricHomogeneous) {
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 8;
    const Mat S = random_psd(n, 5000 + trial, 2.0);
    for (const auto& act : closed_forms()) {
      const Mat D = dual_activation(act, S);
      const Mat Dd = dual_activation_derivative(act, S);
      EXPECT_EQ(D, D.transpose());
      EXPECT_EQ(Dd, Dd.transpose());
      EXPECT_GE(min_eigenvalue(D), -1e-8);
      EXPECT_GE(min_eigenvalue(Dd), -1e-8);
    }
    for (const auto& act : {Activation::relu(), Activation::leaky(0.2)}) {
      const double c = 0.5 + trial * 0.1;
      EXPECT_LT(max_abs(dual_activation(act, c * S) - c * dual_activation(act, S)), 1e-12 * c * max_abs(S) + 1e-15);
    }
    const Mat R = dual_activation_derivative(Activation::relu(), S);
    EXPECT_GE(R.minCoeff(), 0.0);
    EXPECT_LE(R.maxCoeff(), 0.5 + 1e-15);
  }
}
