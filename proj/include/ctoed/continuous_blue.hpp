#ifndef CTOED_CONTINUOUS_BLUE_HPP
#define CTOED_CONTINUOUS_BLUE_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctoed/basis.hpp"
#include "ctoed/error.hpp"
#include "ctoed/kernel.hpp"
#include "ctoed/linalg.hpp"
#include "ctoed/quadrature.hpp"

namespace ctoed {

enum class DegenerateKind { none, no_intercept_f0_nonzero, f0_zero, intercept };

inline std::string to_string(DegenerateKind k) {
  switch (k) {
    case DegenerateKind::none: return "none";
    case DegenerateKind::no_intercept_f0_nonzero: return "no_intercept_f0_nonzero";
    case DegenerateKind::f0_zero: return "f0_zero";
    case DegenerateKind::intercept: return "intercept";
  }
  return "none";
}

/// Best linear unbiased estimation from the full trajectory on [a, b].
struct ContinuousBlue {
  /// Normalizing matrix C; absent in the degenerate a = 0 case with f(0) ≠ 0,
  /// where only the limit of C⁻¹ exists.
  std::optional<Matrix> c;
  /// Var(θ̂_BLUE) = C⁻¹ (or its a → 0 limit).
  Matrix c_inv;
  DegenerateKind degenerate_kind = DegenerateKind::none;
  /// Coefficient of the error-free observation Y₀ (a = 0, f(0) ≠ 0).
  std::optional<Vector> y0_coefficient;
};

/// C = ∫_a^b ḟ ḟᵀ dt + f(a) fᵀ(a) / a for Brownian-motion errors, a > 0.
inline ContinuousBlue c_matrix(const RegressionBasis& basis, const Interval& iv) {
  if (!(iv.a > 0.0)) {
    throw DomainError("c_matrix needs a > 0; use the degenerate operations for a = 0");
  }
  const Vector fa = basis.value(iv.a);
  Matrix c = derivative_gram(basis, iv) + fa * fa.transpose() / iv.a;
  ContinuousBlue out;
  out.c_inv = spd_inverse(c, "C");
  out.c = std::move(c);
  return out;
}

namespace detail {

inline void require_increasing_q(const TriangularKernel& kernel, const Interval& iv) {
  validate_kernel(kernel, iv);
  for (int i = 0; i < kKernelValidationGrid; ++i) {
    const double t = iv.a + iv.length() * i / (kKernelValidationGrid - 1);
    if (!(kernel.wronskian(t) > 0.0)) {
      throw InvalidKernel("u'v - uv' must be positive on [a, b]; fails at t = " +
                          std::to_string(t));
    }
  }
}

/// (ḟv − v̇f) / (v (u̇v − uv̇)), the integrand of the stochastic integral
/// against d(Y_t / v(t)) expressed per unit of Y.
inline Vector blue_integrand(const RegressionBasis& basis, const TriangularKernel& k, double t) {
  const double v = k.v(t);
  return (basis.derivative(t) * v - basis.value(t) * k.dv(t)) / (v * k.wronskian(t));
}

}  // namespace detail

/// C for a general triangular kernel from the explicit integral
///   ∫ (ḟv − v̇f)(ḟv − v̇f)ᵀ / (v² (u̇v − uv̇)) dt + f(a) fᵀ(a) / (u(a) v(a)).
inline ContinuousBlue blue_general_kernel(const RegressionBasis& basis,
                                          const TriangularKernel& kernel, const Interval& iv) {
  detail::require_increasing_q(kernel, iv);
  if (!(kernel.u(iv.a) > 0.0)) {
    throw DomainError("blue_general_kernel needs u(a) > 0; use the degenerate operations");
  }
  const Matrix integral = quadrature::integrate_outer(
      [&](double t) {
        const double v = kernel.v(t);
        return Vector((basis.derivative(t) * v - kernel.dv(t) * basis.value(t)) /
                      (v * std::sqrt(kernel.wronskian(t))));
      },
      basis.size(), iv.a, iv.b);
  const Vector fa = basis.value(iv.a);
  Matrix c = integral + fa * fa.transpose() / (kernel.u(iv.a) * kernel.v(iv.a));
  ContinuousBlue out;
  out.c_inv = spd_inverse(c, "C");
  out.c = std::move(c);
  return out;
}

/// A vector-valued signed measure on [a, b]: point masses plus an optional
/// density. Estimators of the form ∫ Y_t μ(dt) are represented this way.
struct SignedMeasure {
  Interval interval;
  std::vector<std::pair<double, Vector>> atoms;
  std::function<Vector(double)> density;
  Eigen::Index dim = 0;
  /// Absolute quadrature tolerance for integrals against the density; looser
  /// when the density comes from finite differences.
  double quadrature_tol = quadrature::kAbsTol;

  Vector apply(const std::function<double(double)>& y) const {
    Vector out = Vector::Zero(dim);
    for (const auto& [t, mass] : atoms) out += mass * y(t);
    if (density) {
      out += quadrature::integrate_vector([&](double s) { return Vector(density(s) * y(s)); },
                                          dim, interval.a, interval.b, quadrature_tol);
    }
    return out;
  }
};

struct SignedMeasureOptions {
  /// Fall back to central finite differences (h = (b − a)·1e-5) when f, u or
  /// v lack analytic second derivatives.
  bool allow_finite_difference = true;
};

/// μ*(dt) = P_a δ_a + p(t) dt + P_b δ_b representing the continuous BLUE as
/// ∫ Y_t μ*(dt).
inline SignedMeasure signed_measure(const RegressionBasis& basis, const TriangularKernel& kernel,
                                    const Interval& iv, SignedMeasureOptions opts = {}) {
  const ContinuousBlue blue = kernel.kind() == KernelKind::brownian
                                  ? c_matrix(basis, iv)
                                  : blue_general_kernel(basis, kernel, iv);
  const Matrix c_inv = blue.c_inv;
  const double a = iv.a;
  const double b = iv.b;

  const Vector p_a = c_inv *
                     ((basis.value(a) * kernel.du(a) - basis.derivative(a) * kernel.u(a)) /
                      (kernel.u(a) * kernel.wronskian(a)));
  const Vector p_b = c_inv * detail::blue_integrand(basis, kernel, b);

  const bool analytic = basis.has_second_derivative() && kernel.has_second_derivative();
  if (!analytic && !opts.allow_finite_difference) {
    throw CapabilityError("signed_measure needs second derivatives of f, u and v");
  }

  // g = (ḟv − fv̇) / W; the density is −C⁻¹ ġ / v.
  std::function<Vector(double)> g_prime;
  if (analytic) {
    g_prime = [basis, kernel](double t) {
      const double v = kernel.v(t);
      const double w = kernel.wronskian(t);
      const Vector num = basis.derivative(t) * v - basis.value(t) * kernel.dv(t);
      const Vector dnum = basis.second_derivative(t) * v - basis.value(t) * kernel.ddv(t);
      const double dw = kernel.ddu(t) * v - kernel.u(t) * kernel.ddv(t);
      return Vector((dnum * w - num * dw) / (w * w));
    };
  } else {
    const double h = (b - a) * 1e-5;
    g_prime = [basis, kernel, h, a, b](double t) {
      // One-sided near the ends so the stencil stays inside [a, b].
      const double lo = std::max(a, t - h);
      const double hi = std::min(b, t + h);
      return Vector((detail::blue_integrand(basis, kernel, hi) * kernel.v(hi) -
                     detail::blue_integrand(basis, kernel, lo) * kernel.v(lo)) /
                    (hi - lo));
    };
  }

  SignedMeasure out{iv, {{a, p_a}, {b, p_b}}, nullptr, basis.size(),
                    analytic ? quadrature::kAbsTol : 1e-9};
  out.density = [c_inv, g_prime, kernel](double t) {
    return Vector(-c_inv * g_prime(t) / kernel.v(t));
  };
  return out;
}

/// max over `grid` of ‖∫ K(s, t) μ(ds) − Var · f(t)‖_∞. Zero (up to
/// quadrature error) exactly when μ defines the BLUE with covariance Var.
inline double verify_blue_condition(const SignedMeasure& measure, const RegressionBasis& basis,
                                    const TriangularKernel& kernel, const Matrix& variance,
                                    std::span<const double> grid) {
  double worst = 0.0;
  const Interval& iv = measure.interval;
  for (double t : grid) {
    Vector lhs = Vector::Zero(measure.dim);
    for (const auto& [s, mass] : measure.atoms) lhs += kernel(s, t) * mass;
    if (measure.density) {
      auto piece = [&](double lo, double hi) {
        return quadrature::integrate_vector(
            [&](double s) { return Vector(kernel(s, t) * measure.density(s)); }, measure.dim, lo,
            hi, measure.quadrature_tol);
      };
      // K(·, t) has a kink at t; integrate the two smooth pieces separately.
      if (t > iv.a) lhs += piece(iv.a, std::min(t, iv.b));
      if (t < iv.b) lhs += piece(std::max(t, iv.a), iv.b);
    }
    const Vector r = lhs - variance * basis.value(t);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace detail {

inline double sup_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline void require_zero_start(const Interval& iv, const char* op) {
  if (iv.a != 0.0) throw DomainError(std::string(op) + " applies to intervals with a = 0");
}

}  // namespace detail

/// a = 0, no intercept, f(0) ≠ 0: the limit of C_a⁻¹ as a → 0,
///   M₀⁻¹ − M₀⁻¹ f(0) fᵀ(0) M₀⁻¹ / (fᵀ(0) M₀⁻¹ f(0)),
/// and the coefficient M₀⁻¹ f(0) / (fᵀ(0) M₀⁻¹ f(0)) of Y₀.
inline ContinuousBlue degenerate_no_intercept(const RegressionBasis& basis, const Interval& iv) {
  detail::require_zero_start(iv, "degenerate_no_intercept");
  const GramRank gr = gram_rank(basis, iv);
  if (gr.has_intercept) {
    throw InvalidInput("basis has an intercept; use degenerate_intercept");
  }
  const Vector f0 = basis.value(0.0);
  if (detail::sup_norm(f0) <= 1e-12) {
    throw InvalidInput("f(0) = 0; use degenerate_f0_zero");
  }
  const Matrix m0_inv = spd_inverse(gr.gram, "M0");
  const Vector g = m0_inv * f0;
  const double denom = f0.dot(g);
  ContinuousBlue out;
  out.c_inv = symmetrize(m0_inv - g * g.transpose() / denom);
  out.degenerate_kind = DegenerateKind::no_intercept_f0_nonzero;
  out.y0_coefficient = g / denom;
  return out;
}

/// a = 0, no intercept, f(0) = 0: Var(θ̂_BLUE) = M₀⁻¹.
inline ContinuousBlue degenerate_f0_zero(const RegressionBasis& basis, const Interval& iv) {
  detail::require_zero_start(iv, "degenerate_f0_zero");
  if (detail::sup_norm(basis.value(0.0)) > 1e-12) {
    throw InvalidInput("f(0) != 0; use degenerate_no_intercept");
  }
  Matrix m0 = derivative_gram(basis, iv);
  ContinuousBlue out;
  out.c_inv = spd_inverse(m0, "M0");
  out.c = std::move(m0);
  out.degenerate_kind = DegenerateKind::f0_zero;
  return out;
}

/// Covariance of (θ̂₁, θ̃) when one component is constant and a = 0: the
/// intercept is read off the error-free Y₀.
struct InterceptBlue {
  Eigen::Index intercept_index = 0;
  /// Var(θ̃) = M̃₀⁻¹ for the remaining m − 1 parameters (original order).
  Matrix var_tilde;
  double var_theta1 = 0.0;
  /// cov(θ̂₁, θ̃).
  Vector cov_row;

  /// The full m × m covariance in the basis' component order.
  Matrix covariance() const {
    const Eigen::Index m = var_tilde.rows() + 1;
    Matrix out(m, m);
    auto map = [&](Eigen::Index k) { return k < intercept_index ? k : k + 1; };
    out(intercept_index, intercept_index) = var_theta1;
    for (Eigen::Index i = 0; i < m - 1; ++i) {
      out(intercept_index, map(i)) = cov_row(i);
      out(map(i), intercept_index) = cov_row(i);
      for (Eigen::Index j = 0; j < m - 1; ++j) out(map(i), map(j)) = var_tilde(i, j);
    }
    return out;
  }
};

inline InterceptBlue degenerate_intercept(const RegressionBasis& basis, const Interval& iv) {
  detail::require_zero_start(iv, "degenerate_intercept");
  std::vector<Eigen::Index> constant;
  std::vector<Eigen::Index> rest;
  for (Eigen::Index k = 0; k < basis.size(); ++k) {
    bool flat = true;
    for (int i = 0; i <= 200 && flat; ++i) {
      const double t = iv.a + iv.length() * i / 200.0;
      flat = std::abs(basis.component(k).derivative(t)) <= 1e-12;
    }
    (flat ? constant : rest).push_back(k);
  }
  if (constant.size() > 1) {
    throw SingularModel("more than one constant component in the basis");
  }
  if (constant.empty()) {
    throw InvalidBasis("degenerate_intercept needs an explicit constant component");
  }
  if (rest.empty()) {
    throw InvalidBasis("degenerate_intercept needs at least one non-constant component");
  }
  const double level = basis.component(constant[0]).value(0.0);
  if (level == 0.0) throw InvalidBasis("constant component is identically zero");

  const RegressionBasis tilde = basis.subset(rest);
  // The shift f̃ − f̃(0) leaves the derivatives, hence M̃₀, unchanged.
  const Matrix m0_inv = spd_inverse(derivative_gram(tilde, iv), "M0 (without intercept)");
  const Vector f0 = tilde.value(0.0);

  InterceptBlue out;
  out.intercept_index = constant[0];
  out.var_tilde = m0_inv;
  // θ̂₁ = (Y₀ − θ̃ᵀ f̃(0)) / level
  out.var_theta1 = f0.dot(m0_inv * f0) / (level * level);
  out.cov_row = -(m0_inv * f0) / level;
  return out;
}

}  // namespace ctoed

#endif  // CTOED_CONTINUOUS_BLUE_HPP
