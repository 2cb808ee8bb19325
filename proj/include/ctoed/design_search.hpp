#ifndef CTOED_DESIGN_SEARCH_HPP
#define CTOED_DESIGN_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ctoed/basis.hpp"
#include "ctoed/continuous_blue.hpp"
#include "ctoed/design.hpp"
#include "ctoed/discrete_estimator.hpp"
#include "ctoed/error.hpp"
#include "ctoed/finite_blue.hpp"
#include "ctoed/kernel.hpp"
#include "ctoed/linalg.hpp"

namespace ctoed {

/// Design criterion to minimize.
///  - mse_star: tr E[(θ̂_BLUE − θ̂ₙ*)(θ̂_BLUE − θ̂ₙ*)ᵀ] with optimal weights,
///    evaluated on the Doob-transformed model for non-Brownian kernels.
///  - wlse_trace: tr (Xᵀ Σ⁻¹ X)⁻¹.
enum class Objective { mse_star, wlse_trace };

inline std::string to_string(Objective o) {
  return o == Objective::mse_star ? "mse-star" : "wlse";
}

/// Particle swarm settings. Defaults are the standard constriction
/// coefficients.
struct PsoConfig {
  int swarm_size = 40;
  int iterations = 300;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  std::uint64_t seed = 20160321;
  int restarts = 8;

  void validate() const {
    if (swarm_size < 10) throw InvalidInput("pso swarm_size must be >= 10");
    if (iterations < 1) throw InvalidInput("pso iterations must be >= 1");
    if (restarts < 1) throw InvalidInput("pso restarts must be >= 1");
    if (!(inertia > 0.0 && cognitive > 0.0 && social > 0.0)) {
      throw InvalidInput("pso coefficients must be positive");
    }
  }
};

struct SearchResult {
  Design design;
  double objective_value = 0.0;
  /// Best objective after each iteration of the winning restart (search
  /// coordinates; entry 0 is the initial swarm).
  std::vector<double> trace;
  bool converged = false;
  int evaluations = 0;
  int failed_evaluations = 0;
};

/// SplitMix64 step; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// A design criterion bound to a model, with precomputed continuous-time
/// quantities. Searches run in "search coordinates": the transformed time
/// t̃ = q(t) for mse_star, the original time for wlse_trace.
class DesignObjective {
 public:
  DesignObjective(Objective objective, RegressionBasis basis, TriangularKernel kernel,
                  Interval interval)
      : objective_(objective),
        basis_(std::move(basis)),
        kernel_(std::move(kernel)),
        interval_(interval),
        model_(doob_transform(basis_, kernel_, interval_)) {
    if (objective_ == Objective::mse_star) {
      gram_ = derivative_gram(model_.basis, model_.interval);
      c_inv_ = c_matrix(model_.basis, model_.interval).c_inv;
    }
  }

  Objective objective() const { return objective_; }
  const Interval& interval() const { return interval_; }
  const RegressionBasis& basis() const { return basis_; }
  const TriangularKernel& kernel() const { return kernel_; }

  Interval search_interval() const {
    return objective_ == Objective::mse_star ? model_.interval : interval_;
  }

  Design to_original(const Design& search) const {
    return objective_ == Objective::mse_star ? map_design_back(model_, search) : search;
  }

  Design to_search(const Design& original) const {
    return objective_ == Objective::mse_star ? map_design_forward(model_, original) : original;
  }

  /// Objective at a design given in search coordinates.
  double evaluate_search(const Design& d) const {
    if (objective_ == Objective::wlse_trace) {
      return wlse_variance(basis_, kernel_, d).variance.trace();
    }
    const Eigen::Index m = gram_.rows();
    const Matrix b = increment_gram(model_.basis, d);
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() == Eigen::Success && numerical_rank(b) == m) {
      // M B⁻¹ M − M = R + R B⁻¹ R with R = M − B; no cancellation.
      const Matrix r = increment_residual_gram(model_.basis, d);
      const Matrix mse = c_inv_ * (r + r * llt.solve(r)) * c_inv_;
      return mse.trace();
    }
    const Matrix b_inv = pseudo_inverse(b, 1e-10);
    if (max_abs(gram_ * b_inv * b - gram_) > 1e-9 * std::max(1.0, max_abs(gram_))) {
      throw InfeasibleUnbiasedness("increment Gram matrix cannot reproduce M");
    }
    const Matrix mse = c_inv_ * (gram_ * b_inv * gram_ - gram_) * c_inv_;
    return mse.trace();
  }

  /// Objective at a design given in the original time scale.
  double operator()(const Design& original) const { return evaluate_search(to_search(original)); }

 private:
  Objective objective_;
  RegressionBasis basis_;
  TriangularKernel kernel_;
  Interval interval_;
  TransformedModel model_;
  Matrix gram_;
  Matrix c_inv_;
};

namespace detail {

/// Sorts interior coordinates and pushes them into [lo, hi] with spacing ≥ δ.
inline void repair(std::vector<double>& x, double lo, double hi, double delta) {
  std::sort(x.begin(), x.end());
  const auto d = x.size();
  for (std::size_t i = 0; i < d; ++i) {
    const double floor = i == 0 ? lo : x[i - 1] + delta;
    x[i] = std::max(x[i], floor);
  }
  for (std::size_t k = d; k-- > 0;) {
    const double ceil = k + 1 == d ? hi : x[k + 1] - delta;
    x[k] = std::min(x[k], ceil);
  }
}

inline Design with_endpoints(const Interval& iv, const std::vector<double>& interior) {
  std::vector<double> pts;
  pts.reserve(interior.size() + 2);
  pts.push_back(iv.a);
  pts.insert(pts.end(), interior.begin(), interior.end());
  pts.push_back(iv.b);
  return Design(std::move(pts));
}

inline std::vector<double> interior_of(const Design& d) {
  return {d.values().begin() + 1, d.values().end() - 1};
}

}  // namespace detail

/// Deterministic coordinate pattern search in search coordinates. Endpoints
/// stay fixed and the objective never increases. The step schedule is
/// restarted until a full pass moves nothing, so polishing a polished design
/// returns it unchanged.
inline SearchResult polish(const DesignObjective& objective, const Design& design) {
  const Interval s = objective.search_interval();
  const double delta = 1e-6 * s.length();
  std::vector<double> x = detail::interior_of(objective.to_search(design));
  double best = objective.evaluate_search(detail::with_endpoints(s, x));
  SearchResult out{design, best, {best}, true, 1, 0};
  bool moved_any = false;

  const double min_step = 1e-13 * s.length();
  for (int round = 0; round < 100; ++round) {
    bool moved = false;
    double step = 1e-2 * s.length();
    int guard = 0;
    while (step > min_step && guard++ < 200000) {
      bool improved = false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (double dir : {1.0, -1.0}) {
          const double lo = (i == 0 ? s.a : x[i - 1]) + delta;
          const double hi = (i + 1 == x.size() ? s.b : x[i + 1]) - delta;
          const double cand = x[i] + dir * step;
          if (cand < lo || cand > hi) continue;
          std::vector<double> y = x;
          y[i] = cand;
          double value;
          ++out.evaluations;
          try {
            value = objective.evaluate_search(detail::with_endpoints(s, y));
          } catch (const Error&) {
            ++out.failed_evaluations;
            continue;
          }
          // Moves must beat evaluation round-off, or the search wanders.
          if (value < best - 1e-12 * std::abs(best)) {
            best = value;
            x = std::move(y);
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
      moved = moved || improved;
      out.trace.push_back(best);
    }
    if (!moved) break;
    moved_any = true;
  }
  if (!moved_any) {
    out.objective_value = objective(design);
    return out;
  }
  out.design = objective.to_original(detail::with_endpoints(s, x));
  out.objective_value = objective(out.design);
  const double start = objective(design);
  if (out.objective_value > start) {
    out.design = design;
    out.objective_value = start;
  }
  return out;
}

namespace detail {

struct SwarmOutcome {
  std::vector<double> best_x;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  int evaluations = 0;
  int failures = 0;
};

inline SwarmOutcome run_swarm(const DesignObjective& objective, int dim, const PsoConfig& cfg,
                              std::uint64_t stream_seed,
                              const std::optional<std::vector<double>>& seed_particle) {
  const Interval s = objective.search_interval();
  const double delta = 1e-6 * s.length();
  const double lo = s.a + delta;
  const double hi = s.b - delta;
  const double span = hi - lo;
  std::mt19937_64 rng(stream_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SwarmOutcome out;
  auto random_position = [&] {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (auto& xi : x) xi = lo + span * unit(rng);
    repair(x, lo, hi, delta);
    return x;
  };
  // A failed evaluation resamples the particle; after repeated failures it
  // keeps an infinite value for this round.
  auto evaluate = [&](std::vector<double>& x) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      ++out.evaluations;
      try {
        return objective.evaluate_search(with_endpoints(s, x));
      } catch (const Error&) {
        ++out.failures;
        x = random_position();
      }
    }
    return std::numeric_limits<double>::infinity();
  };

  const auto n = static_cast<std::size_t>(cfg.swarm_size);
  std::vector<std::vector<double>> pos(n), vel(n), pbest(n);
  std::vector<double> pbest_value(n);
  for (std::size_t p = 0; p < n; ++p) {
    pos[p] = (p == 0 && seed_particle) ? *seed_particle : random_position();
    repair(pos[p], lo, hi, delta);
    vel[p].resize(static_cast<std::size_t>(dim));
    for (auto& v : vel[p]) v = 0.1 * span * (2.0 * unit(rng) - 1.0);
    pbest_value[p] = evaluate(pos[p]);
    pbest[p] = pos[p];
  }
  auto argmin = [&] {
    std::size_t best = 0;
    for (std::size_t p = 1; p < n; ++p) {
      if (pbest_value[p] < pbest_value[best]) best = p;
    }
    return best;
  };
  std::size_t g = argmin();
  out.trace.push_back(pbest_value[g]);

  const double vmax = 0.5 * span;
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::vector<double> gbest = pbest[g];
    for (std::size_t p = 0; p < n; ++p) {
      for (int k = 0; k < dim; ++k) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double v = cfg.inertia * vel[p][k] + cfg.cognitive * r1 * (pbest[p][k] - pos[p][k]) +
                   cfg.social * r2 * (gbest[k] - pos[p][k]);
        v = std::clamp(v, -vmax, vmax);
        vel[p][k] = v;
        pos[p][k] += v;
      }
      repair(pos[p], lo, hi, delta);
    }
    // Evaluation order does not affect the update: every particle sees the
    // same gbest snapshot, and the argmin breaks ties by lowest index.
    for (std::size_t p = 0; p < n; ++p) {
      const double value = evaluate(pos[p]);
      if (value < pbest_value[p]) {
        pbest_value[p] = value;
        pbest[p] = pos[p];
      }
    }
    g = argmin();
    out.trace.push_back(pbest_value[g]);
  }
  out.best_x = pbest[g];
  out.best_value = pbest_value[g];
  return out;
}

inline bool lexicographically_less(const Design& x, const Design& y) {
  return std::lexicographical_compare(x.values().begin(), x.values().end(), y.values().begin(),
                                      y.values().end());
}

}  // namespace detail

/// Particle swarm search over the interior points t₂, …, tₙ₋₁ with
/// endpoints pinned at a and b. The best of `restarts` independent swarms is
/// refined by `polish`. When the reflected design a + b − t is at least as
/// good (relative tolerance 1e-10) the lexicographically smaller of the two
/// is returned, so symmetric problems have a canonical answer.
inline SearchResult optimize_design(const DesignObjective& objective, int n,
                                    const PsoConfig& cfg = {}) {
  cfg.validate();
  if (n < 2) throw InvalidDesign("design search needs n >= 2");
  const Interval& iv = objective.interval();
  const Interval s = objective.search_interval();
  const Design uniform = equidistant_design(n, iv);
  const double uniform_value = objective(uniform);

  if (n == 2) {
    return SearchResult{uniform, uniform_value, {uniform_value}, true, 1, 0};
  }
  const int dim = n - 2;

  int evaluations = 0;
  int failures = 0;
  std::optional<detail::SwarmOutcome> winner;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::optional<std::vector<double>> seed_particle;
    if (r == 0) seed_particle = detail::interior_of(objective.to_search(uniform));
    auto outcome = detail::run_swarm(objective, dim, cfg,
                                     splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(r))),
                                     seed_particle);
    evaluations += outcome.evaluations;
    failures += outcome.failures;
    if (!winner || outcome.best_value < winner->best_value) winner = std::move(outcome);
  }
  if (failures * 2 > evaluations) {
    throw SearchError("more than half of the objective evaluations failed (" +
                      std::to_string(failures) + " of " + std::to_string(evaluations) + ")");
  }
  if (!std::isfinite(winner->best_value)) throw SearchError("no feasible design found");

  SearchResult best =
      polish(objective, objective.to_original(detail::with_endpoints(s, winner->best_x)));

  std::vector<double> mirrored(best.design.size());
  for (std::size_t i = 0; i < mirrored.size(); ++i) {
    mirrored[mirrored.size() - 1 - i] = iv.a + iv.b - best.design[i];
  }
  mirrored.front() = iv.a;
  mirrored.back() = iv.b;
  try {
    const Design mirror(std::move(mirrored));
    const double mirror_value = objective(mirror);
    const double tol = 1e-10 * std::max(std::abs(best.objective_value), 1e-300);
    const bool better = mirror_value < best.objective_value - tol;
    const bool tie = std::abs(mirror_value - best.objective_value) <= tol;
    if (better || (tie && detail::lexicographically_less(mirror, best.design))) {
      best.design = mirror;
      best.objective_value = mirror_value;
    }
  } catch (const Error&) {
    // The mirror may violate the minimum spacing in search coordinates.
  }

  if (best.objective_value > uniform_value) {
    best.design = uniform;
    best.objective_value = uniform_value;
  }

  const auto& tr = winner->trace;
  const std::size_t back = std::min<std::size_t>(50, tr.size() - 1);
  const double last = tr.back();
  best.converged = std::abs(tr[tr.size() - 1 - back] - last) <= 1e-10 * std::max(1.0, std::abs(last));
  best.trace = tr;
  best.evaluations += evaluations;
  best.failed_evaluations += failures;
  return best;
}

inline SearchResult optimize_design(Objective objective, const RegressionBasis& basis,
                                    const TriangularKernel& kernel, int n, const Interval& iv,
                                    const PsoConfig& cfg = {}) {
  return optimize_design(DesignObjective(objective, basis, kernel, iv), n, cfg);
}

}  // namespace ctoed

#endif  // CTOED_DESIGN_SEARCH_HPP
