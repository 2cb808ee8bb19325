#include <gtest/gtest.h>

#include <random>

#include "ctoed/continuous_blue.hpp"
#include "ctoed/finite_blue.hpp"
#include "test_util.hpp"

using namespace ctoed;

namespace {

/// (Xᵀ Σ⁻¹ X)⁻¹ via an explicit inverse, for comparison with the Cholesky path.
Matrix naive_variance(const RegressionBasis& f, const TriangularKernel& k, const Design& d) {
  const Matrix x = design_matrix(f, d);
  const Matrix s_inv = covariance_matrix(k, d).inverse();
  return (x.transpose() * s_inv * x).inverse();
}

}  // namespace

TEST(DesignMatrix, RowsAreBasisValues) {
  const Matrix x = design_matrix(polynomial_basis({0, 2}), Design({1.0, 3.0}));
  EXPECT_DOUBLE_EQ(x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(x(1, 1), 9.0);
}

TEST(WlseVariance, LinearModelUnderBrownianDependsOnlyOnLastPoint) {
  const auto f = polynomial_basis({1});
  for (const Design& d : {Design({1.0, 2.0}), Design({1.0, 1.3, 1.9, 2.0}), Design({0.5, 2.0})}) {
    EXPECT_NEAR(wlse_variance(f, brownian(), d).variance(0, 0), 0.5, 1e-13);
  }
}

TEST(WlseVariance, LocationModelUsesFirstPoint) {
  const auto f = polynomial_basis({0});
  EXPECT_NEAR(wlse_variance(f, brownian(), Design({1.0, 1.5, 2.0})).variance(0, 0), 1.0, 1e-13);
  EXPECT_NEAR(wlse_variance(f, brownian(), Design({0.25, 2.0})).variance(0, 0), 0.25, 1e-13);
}

TEST(WlseVariance, AgreesWithExplicitInverse) {
  const Interval iv(1.0, 2.0);
  for (const auto& f : {polynomial_basis({2}), polynomial_basis({1, 2, 3}), trig_basis({1, 2})}) {
    for (const auto& k : {brownian(), exponential(1.0)}) {
      const Design d({1.0, 1.12, 1.37, 1.6, 1.81, 2.0});
      EXPECT_LT(test::rel_err(wlse_variance(f, k, d).variance, naive_variance(f, k, d)), 1e-8)
          << f.label() << " " << k.label();
    }
  }
}

TEST(WlseVariance, BoundedBelowByContinuousBlue) {
  const Interval iv(1.0, 2.0);
  const auto f = polynomial_basis({1, 2, 3});
  for (const auto& k : {brownian(), exponential(1.0)}) {
    const Matrix c_inv = blue_general_kernel(f, k, iv).c_inv;
    for (int n : {4, 6, 10, 20}) {
      const Matrix v = wlse_variance(f, k, equidistant_design(n, iv)).variance;
      EXPECT_GE(min_eigenvalue(v - c_inv), -1e-9 * max_abs(v));
      const double eff = efficiency_of(v, c_inv);
      EXPECT_GT(eff, 0.0);
      EXPECT_LE(eff, 1.0 + 1e-12);
    }
  }
}

TEST(WlseVariance, AddingPointsNeverHurts) {
  const auto f = polynomial_basis({1, 2});
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (const auto& k : {brownian(), exponential(2.0)}) {
    std::vector<double> pts{1.0, 1.5, 2.0};
    Matrix prev = wlse_variance(f, k, Design(pts)).variance;
    for (int i = 0; i < 8; ++i) {
      pts.push_back(u(rng));
      std::sort(pts.begin(), pts.end());
      const Matrix next = wlse_variance(f, k, Design(pts)).variance;
      EXPECT_GE(min_eigenvalue(prev - next), -1e-10 * max_abs(prev));
      prev = next;
    }
  }
}

TEST(WlseVariance, RankDeficientDesignThrows) {
  EXPECT_THROW(wlse_variance(polynomial_basis({1, 2, 3}), brownian(), Design({1.0, 2.0})),
               SingularModel);
}

TEST(WlseEstimate, RecoversNoiselessParameters) {
  const auto f = trig_basis({1, 2});
  const Design d = equidistant_design(7, Interval(1.0, 2.0));
  const Vector theta = (Vector(4) << 0.5, -1.0, 2.0, 0.25).finished();
  const Vector y = design_matrix(f, d) * theta;
  for (const auto& k : {brownian(), exponential(1.0)}) {
    EXPECT_LT((wlse_estimate(f, k, d, y) - theta).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_THROW(wlse_estimate(f, brownian(), d, Vector(Vector::Zero(3))), InvalidInput);
}

TEST(WlseEstimate, LinearModelIsEndpointRatio) {
  const auto f = polynomial_basis({1});
  const Design d({1.0, 1.4, 2.0});
  const Vector y = (Vector(3) << 0.7, -0.3, 1.1).finished();
  EXPECT_NEAR(wlse_estimate(f, brownian(), d, y)(0), 1.1 / 2.0, 1e-13);
}

TEST(Efficiency, TraceAndDeterminantForms) {
  const Matrix a = (Matrix(2, 2) << 2.0, 0.0, 0.0, 8.0).finished();
  EXPECT_DOUBLE_EQ(efficiency_of(a, a), 1.0);
  EXPECT_DOUBLE_EQ(d_efficiency_of(a, a), 1.0);
  const Matrix half = 0.5 * a;
  EXPECT_DOUBLE_EQ(efficiency_of(a, half), 0.5);
  EXPECT_NEAR(d_efficiency_of(a, half), 0.5, 1e-15);
}
