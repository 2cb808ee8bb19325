#ifndef CTOED_MONTECARLO_HPP
#define CTOED_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "ctoed/basis.hpp"
#include "ctoed/design.hpp"
#include "ctoed/design_search.hpp"
#include "ctoed/discrete_estimator.hpp"
#include "ctoed/error.hpp"
#include "ctoed/finite_blue.hpp"
#include "ctoed/kernel.hpp"
#include "ctoed/linalg.hpp"

namespace ctoed {

inline constexpr int kDefaultBatches = 20;

struct SimulationPlan {
  RegressionBasis basis;
  TriangularKernel kernel;
  Design design;
  Vector theta;
  int replicates = 100000;
  std::uint64_t seed = 1;

  void validate() const {
    if (replicates < 1) throw InvalidInput("replicates must be >= 1");
    if (theta.size() != basis.size()) {
      throw InvalidInput("theta has " + std::to_string(theta.size()) + " entries, basis has " +
                         std::to_string(basis.size()));
    }
  }
};

/// Draws Y_{tᵢ} = θᵀf(tᵢ) + ε_{tᵢ} one replicate at a time. Each replicate
/// owns a generator seeded from (seed, replicate index), so any replicate
/// can be regenerated independently of the others.
class TrajectorySampler {
 public:
  explicit TrajectorySampler(const SimulationPlan& plan) : seed_(plan.seed) {
    plan.validate();
    const auto n = static_cast<Eigen::Index>(plan.design.size());
    mean_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mean_(i) = plan.basis.value(plan.design[static_cast<std::size_t>(i)]).dot(plan.theta);
    }
    if (plan.kernel.kind() == KernelKind::brownian) {
      brownian_ = true;
      steps_.resize(n);
      double prev = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dt = plan.design[static_cast<std::size_t>(i)] - prev;
        if (!(dt > 0.0)) {
          throw InvalidDesign("Brownian sampling needs 0 < t1 < ... < tn");
        }
        steps_(i) = std::sqrt(dt);
        prev = plan.design[static_cast<std::size_t>(i)];
      }
    } else {
      Eigen::LLT<Matrix> llt(covariance_matrix(plan.kernel, plan.design));
      if (llt.info() != Eigen::Success) {
        throw InvalidDesign("covariance matrix of the design is not positive definite");
      }
      chol_ = llt.matrixL();
    }
  }

  Eigen::Index size() const { return mean_.size(); }

  void draw(std::int64_t replicate, Vector& out) const {
    std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(replicate))));
    std::normal_distribution<double> normal;
    const Eigen::Index n = mean_.size();
    out.resize(n);
    if (brownian_) {
      double w = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        w += steps_(i) * normal(rng);
        out(i) = mean_(i) + w;
      }
      return;
    }
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    out.noalias() = chol_.triangularView<Eigen::Lower>() * z;
    out += mean_;
  }

 private:
  std::uint64_t seed_;
  Vector mean_;
  bool brownian_ = false;
  Vector steps_;
  Matrix chol_;
};

/// n × replicates matrix of simulated observations.
inline Matrix sample_observations(const SimulationPlan& plan) {
  const TrajectorySampler sampler(plan);
  Matrix y(sampler.size(), plan.replicates);
  Vector col;
  for (int r = 0; r < plan.replicates; ++r) {
    sampler.draw(r, col);
    y.col(r) = col;
  }
  return y;
}

/// Mean of a per-replicate statistic with a batch-means standard error.
struct BatchEstimate {
  Vector mean;
  Vector se;
  int replicates = 0;
  int batches = 0;
};

/// Evaluates `statistic` on every replicate and reduces over contiguous
/// batches. Batches are formed by replicate index, so the result does not
/// depend on evaluation order.
inline BatchEstimate batch_means(const SimulationPlan& plan,
                                 const std::function<Vector(const Vector&)>& statistic,
                                 int batches = kDefaultBatches) {
  const TrajectorySampler sampler(plan);
  const int nb = std::max(1, std::min(batches, plan.replicates));
  std::vector<Vector> sums(static_cast<std::size_t>(nb));
  std::vector<int> counts(static_cast<std::size_t>(nb), 0);
  Vector y;
  for (int r = 0; r < plan.replicates; ++r) {
    const auto b = static_cast<std::size_t>(static_cast<std::int64_t>(r) * nb / plan.replicates);
    sampler.draw(r, y);
    const Vector s = statistic(y);
    if (sums[b].size() == 0) sums[b] = Vector::Zero(s.size());
    sums[b] += s;
    ++counts[b];
  }
  const Eigen::Index k = sums[0].size();
  Vector total = Vector::Zero(k);
  Matrix means(k, nb);
  for (int b = 0; b < nb; ++b) {
    total += sums[static_cast<std::size_t>(b)];
    means.col(b) = sums[static_cast<std::size_t>(b)] / counts[static_cast<std::size_t>(b)];
  }
  BatchEstimate out;
  out.mean = total / plan.replicates;
  out.replicates = plan.replicates;
  out.batches = nb;
  if (nb < 2) {
    out.se = Vector::Constant(k, std::numeric_limits<double>::infinity());
    return out;
  }
  out.se.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mu = means.row(j).mean();
    const double ss = (means.row(j).array() - mu).square().sum();
    out.se(j) = std::sqrt(ss / (nb - 1) / nb);
  }
  return out;
}

struct MseReport {
  Vector bias;
  Vector bias_se;
  /// Empirical E[(θ̂ − θ)(θ̂ − θ)ᵀ].
  Matrix mse;
  Matrix mse_se;
  int replicates = 0;
  int batches = 0;

  /// |bias| ≤ k·SE entrywise.
  bool bias_within(double k = 4.0) const {
    return ((bias.array().abs() - k * bias_se.array()) <= 0.0).all();
  }

  /// (mse − expected) / SE entrywise.
  Matrix z_scores(const Matrix& expected) const {
    return ((mse - expected).array() / mse_se.array()).matrix();
  }

  bool mse_within(const Matrix& expected, double k = 3.0) const {
    return (z_scores(expected).array().abs() <= k).all();
  }
};

/// Empirical bias and MSE of the linear estimator θ̂ = W Y, W being m × n.
inline MseReport empirical_mse(const Matrix& weights, const SimulationPlan& plan,
                               int batches = kDefaultBatches) {
  plan.validate();
  if (weights.cols() != static_cast<Eigen::Index>(plan.design.size())) {
    throw InvalidInput("estimator weights do not match the simulation design");
  }
  const Eigen::Index m = weights.rows();
  const Vector theta = plan.theta;
  auto stat = [&](const Vector& y) {
    const Vector e = weights * y - theta;
    Vector s(m + m * m);
    s.head(m) = e;
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) s(m + j * m + i) = e(i) * e(j);
    }
    return s;
  };
  const BatchEstimate est = batch_means(plan, stat, batches);
  MseReport out;
  out.bias = est.mean.head(m);
  out.bias_se = est.se.head(m);
  out.mse = Eigen::Map<const Matrix>(est.mean.data() + m, m, m);
  out.mse_se = Eigen::Map<const Matrix>(est.se.data() + m, m, m);
  out.replicates = est.replicates;
  out.batches = est.batches;
  return out;
}

inline MseReport empirical_mse(const LinearEstimator& est, const SimulationPlan& plan,
                               int batches = kDefaultBatches) {
  return empirical_mse(observation_weights(est), plan, batches);
}

inline MseReport empirical_mse(const KernelEstimator& est, const SimulationPlan& plan,
                               int batches = kDefaultBatches) {
  return empirical_mse(est.observation_weights(), plan, batches);
}

/// WLSE as a linear map: (XᵀΣ⁻¹X)⁻¹ XᵀΣ⁻¹.
inline Matrix wlse_weights(const RegressionBasis& basis, const TriangularKernel& kernel,
                           const Design& design) {
  const WlseResult r = wlse_variance(basis, kernel, design);
  const Eigen::LLT<Matrix> llt(covariance_matrix(kernel, design));
  const Matrix sx = llt.solve(design_matrix(basis, design));
  return r.variance * sx.transpose();
}

}  // namespace ctoed

#endif  // CTOED_MONTECARLO_HPP
