#ifndef CTOED_DISCRETE_ESTIMATOR_HPP
#define CTOED_DISCRETE_ESTIMATOR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ctoed/basis.hpp"
#include "ctoed/continuous_blue.hpp"
#include "ctoed/design.hpp"
#include "ctoed/error.hpp"
#include "ctoed/kernel.hpp"
#include "ctoed/linalg.hpp"
#include "ctoed/quadrature.hpp"

namespace ctoed {

/// θ̂ₙ = C⁻¹ { Σᵢ μᵢ (Y_{tᵢ} − Y_{tᵢ₋₁}) + f(a)/a · Y_a } for Brownian-motion
/// errors on the design's interval.
struct LinearEstimator {
  Design design;
  /// μ₂, …, μₙ (one per increment).
  std::vector<Vector> weights;
  Matrix c_inv;
  /// f(a) / a.
  Vector anchor;
  /// B was singular and its Moore–Penrose inverse was used.
  bool pseudo_inverse_used = false;

  Eigen::Index dim() const { return c_inv.rows(); }
};

namespace detail {

struct Increments {
  std::vector<Vector> df;   // f(tᵢ) − f(tᵢ₋₁)
  std::vector<double> dt;   // tᵢ − tᵢ₋₁
};

inline Increments increments(const RegressionBasis& basis, const Design& d) {
  Increments inc;
  Vector prev = basis.value(d[0]);
  for (std::size_t i = 1; i < d.size(); ++i) {
    Vector cur = basis.value(d[i]);
    inc.df.push_back(cur - prev);
    inc.dt.push_back(d[i] - d[i - 1]);
    prev = std::move(cur);
  }
  return inc;
}

/// B = Σ Δf Δfᵀ / Δt, accumulated as Σ β βᵀ with β = Δf / √Δt.
inline Matrix increment_gram(const Increments& inc, Eigen::Index m) {
  Matrix b = Matrix::Zero(m, m);
  for (std::size_t i = 0; i < inc.df.size(); ++i) {
    const Vector beta = inc.df[i] / std::sqrt(inc.dt[i]);
    b.noalias() += beta * beta.transpose();
  }
  return b;
}

inline void require_estimator_domain(const Design& d, const Interval& iv) {
  if (!(iv.a > 0.0)) throw DomainError("discrete estimator needs a > 0");
  require_spans(d, iv);
}

inline Matrix c_inverse(const RegressionBasis& basis, const Interval& iv) {
  return c_matrix(basis, iv).c_inv;
}

}  // namespace detail

/// B = Σᵢ (f(tᵢ) − f(tᵢ₋₁))(f(tᵢ) − f(tᵢ₋₁))ᵀ / (tᵢ − tᵢ₋₁).
inline Matrix increment_gram(const RegressionBasis& basis, const Design& d) {
  return detail::increment_gram(detail::increments(basis, d), basis.size());
}

/// R = Σ ∫ᵢ (ḟ − Δfᵢ/Δtᵢ)(ḟ − Δfᵢ/Δtᵢ)ᵀ = M − B, integrated per interval so
/// that small R carries no cancellation error from M and B.
inline Matrix increment_residual_gram(const RegressionBasis& basis, const Design& d) {
  const auto inc = detail::increments(basis, d);
  const Eigen::Index m = basis.size();
  Matrix r = Matrix::Zero(m, m);
  for (std::size_t i = 0; i < inc.df.size(); ++i) {
    const Vector slope = inc.df[i] / inc.dt[i];
    const double scale = slope.squaredNorm() + basis.derivative(d[i]).squaredNorm();
    r += quadrature::integrate_outer_rel(
        [&](double t) { return Vector(basis.derivative(t) - slope); }, m, d[i], d[i + 1], 1e-14,
        1e-17 * scale);
  }
  return symmetrize(r);
}

/// Σ μᵢ Δfᵢᵀ − ∫ḟḟᵀ; zero exactly for unbiased estimators.
inline Matrix unbiasedness_defect(const LinearEstimator& est, const RegressionBasis& basis,
                                  const Interval& iv) {
  const auto inc = detail::increments(basis, est.design);
  Matrix s = Matrix::Zero(basis.size(), basis.size());
  for (std::size_t i = 0; i < inc.df.size(); ++i) s += est.weights[i] * inc.df[i].transpose();
  return s - derivative_gram(basis, iv);
}

inline bool check_unbiased(const LinearEstimator& est, const RegressionBasis& basis,
                           const Interval& iv, double rel_tol = 1e-9) {
  const Matrix m = derivative_gram(basis, iv);
  return max_abs(unbiasedness_defect(est, basis, iv)) <= rel_tol * std::max(1.0, max_abs(m));
}

/// Optimal scalar weights μᵢ* = κ (f(tᵢ) − f(tᵢ₋₁)) / (tᵢ − tᵢ₋₁) with
/// κ = ∫ḟ² / Σ (Δf)² / Δt.
inline LinearEstimator optimal_weights_1d(const RegressionBasis& basis, const Design& design,
                                          const Interval& iv) {
  if (basis.size() != 1) throw InvalidInput("optimal_weights_1d needs a one-parameter basis");
  detail::require_estimator_domain(design, iv);
  const auto inc = detail::increments(basis, design);
  double denom = 0.0;
  for (std::size_t i = 0; i < inc.df.size(); ++i) denom += inc.df[i](0) * inc.df[i](0) / inc.dt[i];
  if (!(denom > 0.0)) throw SingularModel("all increments of f vanish; weights are undefined");
  const double kappa = derivative_gram(basis, iv)(0, 0) / denom;

  LinearEstimator est{design, {}, detail::c_inverse(basis, iv), basis.value(iv.a) / iv.a};
  for (std::size_t i = 0; i < inc.df.size(); ++i) {
    est.weights.push_back(Vector::Constant(1, kappa * inc.df[i](0) / inc.dt[i]));
  }
  return est;
}

/// Φ = ∫ḟ² · {Σ (Δf)² / Δt}⁻¹ − 1 (one-parameter models).
inline double phi_criterion(const RegressionBasis& basis, const Design& design,
                            const Interval& iv) {
  if (basis.size() != 1) throw InvalidInput("phi_criterion needs a one-parameter basis");
  require_spans(design, iv);
  const auto inc = detail::increments(basis, design);
  double denom = 0.0;
  for (std::size_t i = 0; i < inc.df.size(); ++i) denom += inc.df[i](0) * inc.df[i](0) / inc.dt[i];
  if (!(denom > 0.0)) throw SingularModel("all increments of f vanish; Φ is undefined");
  return derivative_gram(basis, iv)(0, 0) / denom - 1.0;
}

/// Var(θ̂_BLUE) / Var(θ̂ₙ*) = (1 + Φ / (1 + (f²(a)/a) / ∫ḟ²))⁻¹.
inline double efficiency_1d(const RegressionBasis& basis, const Design& design,
                            const Interval& iv) {
  if (!(iv.a > 0.0)) throw DomainError("efficiency_1d needs a > 0");
  const double phi = phi_criterion(basis, design, iv);
  const double fa = basis.value(iv.a)(0);
  const double integral = derivative_gram(basis, iv)(0, 0);
  return 1.0 / (1.0 + phi / (1.0 + (fa * fa / iv.a) / integral));
}

/// (n−1)·maxΔt² / (H(f) + (n−1)·maxΔt²) with
/// H(f) = ∫ḟ² / (2 max|ḟ| max|f̈|); the maxima are taken on a 1001-point grid.
/// Returns 0 when f̈ vanishes on the grid (Φ is then identically 0).
inline double phi_upper_bound(const RegressionBasis& basis, const Design& design,
                              const Interval& iv) {
  if (basis.size() != 1) throw InvalidInput("phi_upper_bound needs a one-parameter basis");
  if (!basis.has_second_derivative()) {
    throw CapabilityError("phi_upper_bound needs the second derivative of f");
  }
  require_spans(design, iv);
  double max_d1 = 0.0;
  double max_d2 = 0.0;
  for (int i = 0; i < 1001; ++i) {
    const double t = iv.a + iv.length() * i / 1000.0;
    max_d1 = std::max(max_d1, std::abs(basis.derivative(t)(0)));
    max_d2 = std::max(max_d2, std::abs(basis.second_derivative(t)(0)));
  }
  if (max_d2 == 0.0 || max_d1 == 0.0) return 0.0;
  const double h = derivative_gram(basis, iv)(0, 0) / (2.0 * max_d1 * max_d2);
  const double spread = static_cast<double>(design.size() - 1) * design.max_spacing() *
                        design.max_spacing();
  return spread / (h + spread);
}

/// Loewner-optimal unbiased vector weights μᵢ* = M B⁻¹ Δfᵢ / Δtᵢ. A singular
/// B is replaced by its Moore–Penrose inverse; if the resulting weights still
/// violate Σ μᵢ Δfᵢᵀ = M the problem is infeasible and an error is raised.
inline LinearEstimator optimal_weights_multi(const RegressionBasis& basis, const Design& design,
                                             const Interval& iv) {
  detail::require_estimator_domain(design, iv);
  const Eigen::Index m = basis.size();
  const auto inc = detail::increments(basis, design);
  const Matrix gram = derivative_gram(basis, iv);
  const Matrix b = detail::increment_gram(inc, m);

  LinearEstimator est{design, {}, detail::c_inverse(basis, iv), basis.value(iv.a) / iv.a};
  Matrix b_inv;
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() == Eigen::Success && numerical_rank(b) == m) {
    b_inv = llt.solve(Matrix::Identity(m, m));
  } else {
    b_inv = pseudo_inverse(b, 1e-10);
    est.pseudo_inverse_used = true;
  }
  const Matrix mb = gram * b_inv;
  for (std::size_t i = 0; i < inc.df.size(); ++i) est.weights.push_back(mb * inc.df[i] / inc.dt[i]);

  if (!check_unbiased(est, basis, iv)) {
    throw InfeasibleUnbiasedness(
        "no weights satisfy the unbiasedness identity for this design (" +
        std::to_string(design.size() - 1) + " increments, " + std::to_string(m) + " parameters)");
  }
  return est;
}

/// E[(θ̂_BLUE − θ̂ₙ)(θ̂_BLUE − θ̂ₙ)ᵀ] for an unbiased estimator:
///   −C⁻¹ M C⁻¹ + Σ C⁻¹ γᵢ γᵢᵀ C⁻¹,  γᵢ = μᵢ √Δtᵢ.
inline Matrix mse_matrix(const LinearEstimator& est, const RegressionBasis& basis,
                         const Interval& iv) {
  Matrix s = -derivative_gram(basis, iv);
  for (std::size_t i = 1; i < est.design.size(); ++i) {
    const Vector gamma = est.weights[i - 1] * std::sqrt(est.design[i] - est.design[i - 1]);
    s.noalias() += gamma * gamma.transpose();
  }
  return symmetrize(est.c_inv * s * est.c_inv);
}

/// The same mean squared error for arbitrary (possibly biased) weights,
/// including the θθᵀ bias term:
///   C⁻¹ { Σ ∫(ḟ − μᵢ)(ḟ − μᵢ)ᵀ + D θ θᵀ Dᵀ } C⁻¹,  D = Σ ∫(ḟ − μᵢ) ḟᵀ.
inline Matrix mse_matrix_general(const LinearEstimator& est, const RegressionBasis& basis,
                                 const Interval& iv, const Vector& theta) {
  const auto inc = detail::increments(basis, est.design);
  const Matrix gram = derivative_gram(basis, iv);
  Matrix spread = gram;
  Matrix d = gram;
  for (std::size_t i = 0; i < inc.df.size(); ++i) {
    const Vector& mu = est.weights[i];
    spread -= mu * inc.df[i].transpose() + inc.df[i] * mu.transpose();
    spread += mu * mu.transpose() * inc.dt[i];
    d -= mu * inc.df[i].transpose();
  }
  const Vector dtheta = d * theta;
  return symmetrize(est.c_inv * (spread + dtheta * dtheta.transpose()) * est.c_inv);
}

inline double mse_trace(const LinearEstimator& est, const RegressionBasis& basis,
                        const Interval& iv) {
  return mse_matrix(est, basis, iv).trace();
}

/// Var(θ̂ₙ) = C⁻¹ + E[(θ̂ₙ − θ̂_BLUE)(θ̂ₙ − θ̂_BLUE)ᵀ] for unbiased θ̂ₙ.
inline Matrix estimator_variance(const LinearEstimator& est, const RegressionBasis& basis,
                                 const Interval& iv) {
  return est.c_inv + mse_matrix(est, basis, iv);
}

/// tr(C⁻¹) / tr(Var θ̂ₙ).
inline double efficiency_multi(const LinearEstimator& est, const RegressionBasis& basis,
                               const Interval& iv) {
  return est.c_inv.trace() / estimator_variance(est, basis, iv).trace();
}

/// The m × n matrix W with θ̂ₙ = W Y.
inline Matrix observation_weights(const LinearEstimator& est) {
  const auto n = static_cast<Eigen::Index>(est.design.size());
  Matrix w = Matrix::Zero(est.dim(), n);
  w.col(0) = est.anchor;
  for (Eigen::Index i = 1; i < n; ++i) {
    w.col(i) += est.weights[i - 1];
    w.col(i - 1) -= est.weights[i - 1];
  }
  return est.c_inv * w;
}

/// Applies the estimator to observations (n × r, one replicate per column).
inline Matrix apply_estimator(const LinearEstimator& est, const Matrix& observations) {
  if (observations.rows() != static_cast<Eigen::Index>(est.design.size())) {
    throw InvalidInput("observation count " + std::to_string(observations.rows()) +
                       " does not match design size " + std::to_string(est.design.size()));
  }
  return observation_weights(est) * observations;
}

inline Vector apply_estimator(const LinearEstimator& est, const Vector& observations) {
  return apply_estimator(est, Matrix(observations)).col(0);
}

/// The estimator as a discrete signed measure (masses at the design points).
inline SignedMeasure to_measure(const LinearEstimator& est, const Interval& iv) {
  const Matrix w = observation_weights(est);
  SignedMeasure out{iv, {}, nullptr, est.dim()};
  for (std::size_t i = 0; i < est.design.size(); ++i) {
    out.atoms.emplace_back(est.design[i], w.col(static_cast<Eigen::Index>(i)));
  }
  return out;
}

/// θ̂ₙ* for a general triangular kernel: the optimal estimator of the
/// Doob-transformed (Brownian) model applied to Y_t / v(t) at t̃ = q(t).
struct KernelEstimator {
  TransformedModel model;
  /// Design in the original time scale.
  Design design;
  /// Estimator on the transformed model (design q(t₁), …, q(tₙ)).
  LinearEstimator transformed;

  Matrix observation_weights() const {
    Matrix w = ctoed::observation_weights(transformed);
    for (std::size_t i = 0; i < design.size(); ++i) {
      w.col(static_cast<Eigen::Index>(i)) /= model.kernel.v(design[i]);
    }
    return w;
  }

  Matrix apply(const Matrix& observations) const {
    if (observations.rows() != static_cast<Eigen::Index>(design.size())) {
      throw InvalidInput("observation count does not match design size");
    }
    return observation_weights() * observations;
  }

  Matrix variance() const {
    return estimator_variance(transformed, model.basis, model.interval);
  }
  Matrix c_inv() const { return transformed.c_inv; }
  double efficiency() const { return c_inv().trace() / variance().trace(); }
};

inline KernelEstimator optimal_estimator(const RegressionBasis& basis,
                                         const TriangularKernel& kernel, const Design& design,
                                         const Interval& iv) {
  require_spans(design, iv);
  TransformedModel model = doob_transform(basis, kernel, iv);
  Design tilde = map_design_forward(model, design);
  LinearEstimator est = optimal_weights_multi(model.basis, tilde, model.interval);
  return KernelEstimator{std::move(model), design, std::move(est)};
}

}  // namespace ctoed

#endif  // CTOED_DISCRETE_ESTIMATOR_HPP
