#include <gtest/gtest.h>

#include <cstdio>
#include <string>

#include "ctoed/design_search.hpp"
#include "ctoed/discrete_estimator.hpp"
#include "ctoed/finite_blue.hpp"

using namespace ctoed;

namespace {

const Interval kUnit(1.0, 2.0);

struct Row {
  RegressionBasis basis;
  TriangularKernel kernel;
  Objective objective;
  std::vector<double> published;
};

std::vector<Row> table2_rows() {
  const auto m41 = polynomial_basis({1, 2, 3});
  const auto m42 = trig_basis({1, 2});
  const auto b = brownian();
  const auto e = exponential(1.0);
  return {
      {m41, b, Objective::wlse_trace, {1, 1.466, 1.680, 1.852, 2}},
      {m41, b, Objective::mse_star, {1, 1.444, 1.668, 1.846, 2}},
      {m41, e, Objective::wlse_trace, {1, 1.474, 1.683, 1.852, 2}},
      {m41, e, Objective::mse_star, {1, 1.459, 1.674, 1.847, 2}},
      {m42, b, Objective::wlse_trace, {1, 1.111, 1.243, 1.800, 2}},
      {m42, b, Objective::mse_star, {1, 1.120, 1.264, 1.802, 2}},
      {m42, e, Objective::wlse_trace, {1, 1.113, 1.245, 1.800, 2}},
      {m42, e, Objective::mse_star, {1, 1.120, 1.263, 1.801, 2}},
  };
}

PsoConfig quick() {
  PsoConfig cfg;
  cfg.swarm_size = 20;
  cfg.iterations = 120;
  cfg.restarts = 2;
  return cfg;
}

std::string digits12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

}  // namespace

TEST(PsoConfig, ValidatesParameters) {
  PsoConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.swarm_size = 5;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.restarts = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.inertia = -0.1;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(Objective, Names) {
  EXPECT_EQ(to_string(Objective::mse_star), "mse-star");
  EXPECT_EQ(to_string(Objective::wlse_trace), "wlse");
}

TEST(DesignObjective, MatchesEstimatorModules) {
  const auto f = polynomial_basis({1, 2, 3});
  const Design d({1.0, 1.3, 1.55, 1.9, 2.0});
  for (const auto& k : {brownian(), exponential(1.0)}) {
    const DesignObjective wl(Objective::wlse_trace, f, k, kUnit);
    EXPECT_NEAR(wl(d), wlse_variance(f, k, d).variance.trace(), 1e-12 * wl(d));
    const DesignObjective star(Objective::mse_star, f, k, kUnit);
    const auto est = optimal_estimator(f, k, d, kUnit);
    const double expected = mse_trace(est.transformed, est.model.basis, est.model.interval);
    EXPECT_NEAR(star(d), expected, 1e-9 * expected);
  }
}

TEST(OptimizeDesign, LinearModelObjectiveIsZero) {
  const auto res =
      optimize_design(Objective::mse_star, polynomial_basis({1}), brownian(), 5, kUnit, quick());
  EXPECT_NEAR(res.objective_value, 0.0, 1e-15);
}

TEST(OptimizeDesign, TwoPointDesignIsTheEndpoints) {
  const auto res =
      optimize_design(Objective::mse_star, polynomial_basis({2}), brownian(), 2, kUnit, quick());
  EXPECT_EQ(res.design.values(), (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(optimize_design(Objective::mse_star, polynomial_basis({2}), brownian(), 1, kUnit),
               InvalidDesign);
}

TEST(OptimizeDesign, QuadraticOptimumIsEquidistant) {
  const auto res =
      optimize_design(Objective::mse_star, polynomial_basis({2}), brownian(), 5, kUnit, quick());
  const Design u = equidistant_design(5, kUnit);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(res.design[i], u[i], 1e-4);
}

TEST(OptimizeDesign, NeverWorseThanEquidistantAndFeasible) {
  for (const auto& row : table2_rows()) {
    const DesignObjective obj(row.objective, row.basis, row.kernel, kUnit);
    for (int n : {5, 6, 7}) {
      const auto res = optimize_design(obj, n, quick());
      EXPECT_LE(res.objective_value, obj(equidistant_design(n, kUnit)));
      EXPECT_EQ(res.design.size(), static_cast<std::size_t>(n));
      EXPECT_EQ(res.design.front(), 1.0);
      EXPECT_EQ(res.design.back(), 2.0);
      for (std::size_t i = 1; i < res.design.size(); ++i) EXPECT_GT(res.design[i], res.design[i - 1]);
      EXPECT_NEAR(res.objective_value, obj(res.design), 1e-12 * res.objective_value);
    }
  }
}

TEST(OptimizeDesign, DeterministicForFixedSeed) {
  const auto f = trig_basis({1, 2});
  const auto r1 = optimize_design(Objective::mse_star, f, exponential(1.0), 5, kUnit, quick());
  const auto r2 = optimize_design(Objective::mse_star, f, exponential(1.0), 5, kUnit, quick());
  EXPECT_EQ(digits12(r1.objective_value), digits12(r2.objective_value));
  EXPECT_EQ(r1.design.values(), r2.design.values());
  EXPECT_EQ(r1.trace, r2.trace);
}

TEST(OptimizeDesign, ReproducesPublishedDesigns) {
  for (const auto& row : table2_rows()) {
    const auto res = optimize_design(row.objective, row.basis, row.kernel, 5, kUnit);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_NEAR(res.design[i], row.published[i], 0.02)
          << row.basis.label() << " " << row.kernel.label() << " " << to_string(row.objective);
    }
  }
}

TEST(OptimizeDesign, ObjectivesGiveSimilarDesigns) {
  const auto rows = table2_rows();
  for (std::size_t r = 0; r < rows.size(); r += 2) {
    const auto wl = optimize_design(rows[r].objective, rows[r].basis, rows[r].kernel, 5, kUnit);
    const auto st =
        optimize_design(rows[r + 1].objective, rows[r + 1].basis, rows[r + 1].kernel, 5, kUnit);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_LT(std::abs(wl.design[i] - st.design[i]), 0.05);
  }
}

TEST(OptimizeDesign, MirrorTieResolvesToLexicographicallySmaller) {
  // Stationary kernel + reflection-closed trig span: the WLSE trace is
  // invariant under t -> a + b - t.
  const DesignObjective obj(Objective::wlse_trace, trig_basis({1, 2}), exponential(1.0), kUnit);
  const Design d({1.0, 1.113, 1.245, 1.8, 2.0});
  const Design mirror({1.0, 1.2, 1.755, 1.887, 2.0});
  EXPECT_NEAR(obj(d), obj(mirror), 1e-10 * obj(d));
  const auto res = optimize_design(obj, 5);
  EXPECT_LT(res.design[1], 1.5);
}

TEST(Polish, EquidistantQuadraticStaysPut) {
  const DesignObjective obj(Objective::mse_star, polynomial_basis({2}), brownian(), kUnit);
  const Design u = equidistant_design(5, kUnit);
  const auto res = polish(obj, u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(res.design[i], u[i], 1e-4);
  EXPECT_LE(res.objective_value, obj(u));
}

TEST(Polish, NonIncreasingAndIdempotent) {
  const DesignObjective obj(Objective::mse_star, polynomial_basis({1, 2, 3}), exponential(1.0), kUnit);
  const Design start({1.0, 1.3, 1.5, 1.7, 2.0});
  const auto once = polish(obj, start);
  EXPECT_LE(once.objective_value, obj(start));
  for (std::size_t i = 1; i < once.trace.size(); ++i) EXPECT_LE(once.trace[i], once.trace[i - 1]);
  EXPECT_EQ(once.design.front(), 1.0);
  EXPECT_EQ(once.design.back(), 2.0);
  const auto twice = polish(obj, once.design);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(twice.design[i], once.design[i], 1e-10);
  EXPECT_NEAR(twice.objective_value, once.objective_value, 1e-10 * once.objective_value);
}

TEST(Polish, SwarmOutputNeedsOnlySmallRefinement) {
  const PsoConfig cfg;
  for (const auto& row : table2_rows()) {
    const DesignObjective obj(row.objective, row.basis, row.kernel, kUnit);
    const auto swarm = detail::run_swarm(obj, 3, cfg, splitmix64(cfg.seed ^ splitmix64(0)),
                                         std::nullopt);
    const Design raw = obj.to_original(detail::with_endpoints(obj.search_interval(), swarm.best_x));
    const double before = obj(raw);
    const double after = polish(obj, raw).objective_value;
    EXPECT_LE(after, before);
    EXPECT_LT((before - after) / before, 1e-6) << row.basis.label() << " " << row.kernel.label();
  }
}
