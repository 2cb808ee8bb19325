#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ctoed/basis.hpp"
#include "ctoed/design.hpp"
#include "test_util.hpp"

using namespace ctoed;

TEST(Interval, RejectsEmptyOrReversed) {
  EXPECT_THROW(Interval(2.0, 1.0), InvalidInput);
  EXPECT_THROW(Interval(1.0, 1.0), InvalidInput);
  EXPECT_THROW(Interval(0.0, INFINITY), InvalidInput);
  const Interval iv(1.0, 3.0);
  EXPECT_DOUBLE_EQ(iv.length(), 2.0);
  EXPECT_TRUE(iv.contains(1.0));
  EXPECT_FALSE(iv.contains(3.5));
}

TEST(PolynomialBasis, ValuesAndDerivativesMatchFiniteDifferences) {
  const auto f = polynomial_basis({0, 1, 2, 3, 5});
  for (double t : {0.7, 1.0, 1.3, 2.0}) {
    const Vector v = f.value(t);
    const Vector d = f.derivative(t);
    const Vector dd = f.second_derivative(t);
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      const auto& c = f.component(k);
      EXPECT_NEAR(d(k), test::central_diff(c.value, t), 1e-7 * std::max(1.0, std::abs(d(k))));
      EXPECT_NEAR(dd(k), test::central_diff(c.derivative, t), 1e-6 * std::max(1.0, std::abs(dd(k))));
    }
    EXPECT_DOUBLE_EQ(v(0), 1.0);
    EXPECT_DOUBLE_EQ(v(4), std::pow(t, 5));
  }
  EXPECT_EQ(f.label(), "(1, t, t^2, t^3, t^5)");
}

TEST(PolynomialBasis, RejectsBadPowers) {
  EXPECT_THROW(polynomial_basis({1, 1}), InvalidBasis);
  EXPECT_THROW(polynomial_basis({-1}), InvalidBasis);
  EXPECT_THROW(polynomial_basis(std::span<const int>{}), InvalidBasis);
}

TEST(TrigBasis, ComponentOrderAndDerivatives) {
  const auto f = trig_basis({1, 2});
  ASSERT_EQ(f.size(), 4);
  const double t = 1.3;
  const Vector v = f.value(t);
  EXPECT_DOUBLE_EQ(v(0), std::sin(t));
  EXPECT_DOUBLE_EQ(v(1), std::cos(t));
  EXPECT_DOUBLE_EQ(v(2), std::sin(2 * t));
  EXPECT_DOUBLE_EQ(v(3), std::cos(2 * t));
  for (Eigen::Index k = 0; k < 4; ++k) {
    EXPECT_NEAR(f.derivative(t)(k), test::central_diff(f.component(k).value, t), 1e-8);
    EXPECT_NEAR(f.second_derivative(t)(k), test::central_diff(f.component(k).derivative, t), 1e-8);
  }
  EXPECT_THROW(trig_basis({0}), InvalidBasis);
  EXPECT_THROW(trig_basis({2, 2}), InvalidBasis);
  EXPECT_THROW(trig_basis(std::span<const int>{}), InvalidBasis);
}

TEST(RegressionBasis, MissingSecondDerivativeIsACapabilityError) {
  RegressionBasis f({{[](double t) { return t * t; }, [](double t) { return 2 * t; }, {}, "t^2"}});
  EXPECT_FALSE(f.has_second_derivative());
  EXPECT_THROW(f.second_derivative(1.0), CapabilityError);
  EXPECT_THROW(RegressionBasis({{[](double t) { return t; }, {}, {}, "bad"}}), InvalidBasis);
  EXPECT_THROW(RegressionBasis(std::vector<BasisFunction>{}), InvalidBasis);
}

TEST(AffineShift, ShiftsValuesNotDerivatives) {
  const auto f = polynomial_basis({2});
  const auto g = affine_shift(f, -0.5);
  EXPECT_DOUBLE_EQ(g.value(1.5)(0), 1.5 * 1.5 - 0.5);
  EXPECT_DOUBLE_EQ(g.derivative(1.5)(0), 3.0);
  EXPECT_EQ(g.label(), "(t^2-0.5)");
  const std::vector<double> offs{1.0};
  EXPECT_THROW(affine_shift(polynomial_basis({1, 2}), offs), InvalidBasis);
}

TEST(DerivativeGram, PolynomialClosedForm) {
  // M_ij = p_i p_j (b^{p_i+p_j-1} - a^{p_i+p_j-1}) / (p_i + p_j - 1)
  const std::vector<int> p{1, 2, 3};
  const auto f = polynomial_basis(p);
  const double a = 1.0;
  const double b = 2.0;
  const Matrix m = derivative_gram(f, a, b);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int e = p[i] + p[j] - 1;
      const double expected = p[i] * p[j] * (std::pow(b, e) - std::pow(a, e)) / e;
      EXPECT_NEAR(m(i, j), expected, 1e-12 * expected);
    }
  }
}

TEST(DerivativeGram, TrigAgreesWithSimpson) {
  const auto f = trig_basis({1, 2});
  const Matrix m = derivative_gram(f, Interval(1.0, 2.0));
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double s = test::simpson(
          [&](double t) { return f.component(i).derivative(t) * f.component(j).derivative(t); },
          1.0, 2.0);
      EXPECT_NEAR(m(i, j), s, 1e-11);
    }
  }
}

TEST(DerivativeGram, SymmetricPositiveSemidefiniteForRandomBases) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> pick(0, 7);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> powers;
    while (powers.size() < 3) {
      const int p = pick(rng);
      if (std::find(powers.begin(), powers.end(), p) == powers.end()) powers.push_back(p);
    }
    const Matrix m = derivative_gram(polynomial_basis(powers), Interval(0.5, 2.5));
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-14 * m.cwiseAbs().maxCoeff());
    EXPECT_GE(min_eigenvalue(m), -1e-9 * max_eigenvalue(m));
  }
}

TEST(GramRank, DetectsInterceptAndDependence) {
  const Interval iv(0.0, 1.0);
  const GramRank with_one = gram_rank(polynomial_basis({0, 1, 2}), iv);
  EXPECT_EQ(with_one.rank, 2);
  EXPECT_TRUE(with_one.has_intercept);
  EXPECT_TRUE(with_one.linearly_independent);

  const GramRank plain = gram_rank(polynomial_basis({1, 2}), iv);
  EXPECT_EQ(plain.rank, 2);
  EXPECT_FALSE(plain.has_intercept);

  // t, 2t and 1: derivatives span a single direction, rank deficit 2.
  const auto t = polynomial_basis({1}).component(0);
  BasisFunction twice{[](double s) { return 2 * s; }, [](double) { return 2.0; }, {}, "2t"};
  const auto one = polynomial_basis({0}).component(0);
  const GramRank dep = gram_rank(RegressionBasis({t, twice, one}), iv);
  EXPECT_EQ(dep.rank, 1);
  EXPECT_FALSE(dep.linearly_independent);
}

TEST(Subset, KeepsRequestedOrder) {
  const auto f = polynomial_basis({1, 2, 3});
  const std::vector<Eigen::Index> idx{2, 0};
  const auto g = f.subset(idx);
  EXPECT_EQ(g.size(), 2);
  EXPECT_DOUBLE_EQ(g.value(2.0)(0), 8.0);
  EXPECT_DOUBLE_EQ(g.value(2.0)(1), 2.0);
}

TEST(Design, ValidatesOrderingAndSpan) {
  EXPECT_THROW(Design({1.0}), InvalidDesign);
  EXPECT_THROW(Design({1.0, 1.0}), InvalidDesign);
  EXPECT_THROW(Design({2.0, 1.0}), InvalidDesign);
  EXPECT_THROW(Design({1.0, NAN}), InvalidDesign);
  const Interval iv(1.0, 2.0);
  EXPECT_THROW(require_spans(Design({1.0, 1.5}), iv), InvalidDesign);
  EXPECT_NO_THROW(require_spans(Design({1.0, 1.5, 2.0}), iv));
  const Design u = equidistant_design(5, iv);
  EXPECT_EQ(u.size(), 5u);
  EXPECT_DOUBLE_EQ(u.front(), 1.0);
  EXPECT_DOUBLE_EQ(u.back(), 2.0);
  EXPECT_DOUBLE_EQ(u[2], 1.5);
  EXPECT_DOUBLE_EQ(u.max_spacing(), 0.25);
  EXPECT_THROW(equidistant_design(1, iv), InvalidDesign);
}

namespace {

double five_point(const std::function<double(double)>& f, double t, double h) {
  return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h);
}

}  // namespace

TEST(BuiltInBases, AnalyticDerivativeMatchesFivePointStencil) {
  const Interval iv(1.0, 2.0);
  const std::vector<RegressionBasis> bases{polynomial_basis({0, 1, 2, 3, 4}), trig_basis({1, 2, 3}),
                                           affine_shift(polynomial_basis({2}), -0.5)};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(iv.a, iv.b);
  for (const auto& f : bases) {
    for (int i = 0; i < 100; ++i) {
      const double t = u(rng);
      for (Eigen::Index k = 0; k < f.size(); ++k) {
        const double exact = f.component(k).derivative(t);
        const double fd = five_point(f.component(k).value, t, 1e-3);
        EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact))) << f.label() << " k=" << k;
      }
    }
  }
}

TEST(GramRank, ConstantComponentLowersRankByOne) {
  const Interval iv(1.0, 2.0);
  for (int m = 1; m <= 4; ++m) {
    std::vector<int> powers(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) powers[static_cast<std::size_t>(k)] = k;
    const GramRank r = gram_rank(polynomial_basis(powers), iv);
    EXPECT_EQ(r.rank, m - 1) << "m=" << m;
    EXPECT_TRUE(r.has_intercept);
  }
  const GramRank cubic = gram_rank(polynomial_basis({1, 2, 3}), iv);
  EXPECT_EQ(cubic.rank, 3);
  EXPECT_FALSE(cubic.has_intercept);
  EXPECT_EQ(gram_rank(polynomial_basis({2}), iv).rank, 1);
  const GramRank line = gram_rank(polynomial_basis({0, 1}), Interval(0.0, 1.0));
  EXPECT_EQ(line.rank, 1);
  EXPECT_TRUE(line.has_intercept);
}

TEST(GramRank, InvariantUnderReordering) {
  const Interval iv(1.0, 2.0);
  EXPECT_EQ(gram_rank(polynomial_basis({0, 2, 3}), iv).rank,
            gram_rank(polynomial_basis({3, 0, 2}), iv).rank);
  EXPECT_EQ(gram_rank(trig_basis({1, 2}), iv).rank, gram_rank(trig_basis({2, 1}), iv).rank);
}

TEST(PolynomialBasis, ConstantComponent) {
  const auto one = polynomial_basis({0});
  EXPECT_DOUBLE_EQ(one.value(3.0)(0), 1.0);
  EXPECT_DOUBLE_EQ(one.derivative(3.0)(0), 0.0);
  const auto sc = trig_basis({1});
  EXPECT_EQ(sc.label(), "(sin t, cos t)");
  EXPECT_DOUBLE_EQ(trig_basis({2}).derivative(0.0)(0), 2.0);
}
