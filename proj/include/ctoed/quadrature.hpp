#ifndef CTOED_QUADRATURE_HPP
#define CTOED_QUADRATURE_HPP

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <string>

#include "ctoed/error.hpp"
#include "ctoed/linalg.hpp"

namespace ctoed::quadrature {

/// Absolute tolerance for every integral the library evaluates.
inline constexpr double kAbsTol = 1e-12;
inline constexpr unsigned kMaxDepth = 18;

namespace detail {

struct Piece {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

/// Interval bisection over the non-adaptive 15-point Gauss–Kronrod rule.
/// Boost's own recursive driver reports inflated error estimates on short
/// intervals, so only its single-panel rule is used.
template <class F>
Piece bisect(F& f, double a, double b, double tol_per_length, unsigned depth) {
  Piece p;
  p.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0,
                                                                          &p.error, &p.l1);
  const double allowed = tol_per_length * (b - a) + 1e-14 * p.l1;
  if (p.error <= allowed || depth == 0 || !std::isfinite(p.value)) return p;
  const double mid = 0.5 * (a + b);
  const Piece left = bisect(f, a, mid, tol_per_length, depth - 1);
  const Piece right = bisect(f, mid, b, tol_per_length, depth - 1);
  return {left.value + right.value, left.error + right.error, left.l1 + right.l1};
}

}  // namespace detail

/// Adaptive 15-point Gauss–Kronrod quadrature of a smooth scalar integrand.
/// Throws NumericError when the error estimate cannot be brought below
/// abs_tol (relaxed proportionally for integrals of large magnitude, where
/// 1e-12 absolute is below double resolution).
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = kAbsTol) {
  if (a == b) return 0.0;
  const detail::Piece p = detail::bisect(f, a, b, abs_tol / std::abs(b - a), kMaxDepth);
  if (!std::isfinite(p.value) || p.error > abs_tol + 1e-13 * p.l1) {
    throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "], error estimate " + std::to_string(p.error));
  }
  return p.value;
}

/// Entrywise integral of a vector-valued integrand of known length.
inline Vector integrate_vector(const std::function<Vector(double)>& f, Eigen::Index size,
                               double a, double b, double abs_tol = kAbsTol) {
  Vector out(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    out(i) = integrate([&](double t) { return f(t)(i); }, a, b, abs_tol);
  }
  return out;
}

/// ∫ g gᵀ dt for a vector-valued g; only the upper triangle is integrated.
inline Matrix integrate_outer(const std::function<Vector(double)>& g, Eigen::Index size,
                              double a, double b) {
  Matrix out(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = i; j < size; ++j) {
      out(i, j) = integrate(
          [&](double t) {
            const Vector v = g(t);
            return v(i) * v(j);
          },
          a, b);
      out(j, i) = out(i, j);
    }
  }
  return out;
}

namespace detail {

/// One 15-point Kronrod panel of ∫ g gᵀ; `error` is the entrywise max
/// distance to the embedded 7-point Gauss value.
inline Matrix outer_panel(const std::function<Vector(double)>& g, Eigen::Index size, double a,
                          double b, double& error) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  Matrix k = Matrix::Zero(size, size);
  Matrix gs = Matrix::Zero(size, size);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Matrix node = Matrix::Zero(size, size);
    for (double sgn : {1.0, -1.0}) {
      const Vector v = g(mid + sgn * half * x[i]);
      node.noalias() += v * v.transpose();
      if (i == 0) break;
    }
    k += wk[i] * node;
    if (i % 2 == 0) gs += wg[i / 2] * node;
  }
  error = half * max_abs(k - gs);
  return half * k;
}

inline Matrix outer_bisect(const std::function<Vector(double)>& g, Eigen::Index size, double a,
                           double b, double rel_tol, double floor, unsigned depth) {
  double err = 0.0;
  Matrix v = outer_panel(g, size, a, b, err);
  if (err <= rel_tol * max_abs(v) + floor * (b - a) || depth == 0 || !v.allFinite()) return v;
  const double m = 0.5 * (a + b);
  return outer_bisect(g, size, a, m, rel_tol, floor, depth - 1) +
         outer_bisect(g, size, m, b, rel_tol, floor, depth - 1);
}

}  // namespace detail

/// ∫ g gᵀ dt to relative accuracy, with all entries sharing the nodes.
/// `floor` is an absolute error allowance per unit length.
inline Matrix integrate_outer_rel(const std::function<Vector(double)>& g, Eigen::Index size,
                                  double a, double b, double rel_tol = 1e-14, double floor = 0.0) {
  if (a == b) return Matrix::Zero(size, size);
  return detail::outer_bisect(g, size, a, b, rel_tol, floor, kMaxDepth);
}

}  // namespace ctoed::quadrature

#endif  // CTOED_QUADRATURE_HPP
