#ifndef CTOED_FINITE_BLUE_HPP
#define CTOED_FINITE_BLUE_HPP

#include <cmath>
#include <string>
#include <utility>

#include "ctoed/basis.hpp"
#include "ctoed/design.hpp"
#include "ctoed/error.hpp"
#include "ctoed/kernel.hpp"
#include "ctoed/linalg.hpp"

namespace ctoed {

/// Weighted (generalized) least squares on a finite design.
struct WlseResult {
  /// (Xᵀ Σ⁻¹ X)⁻¹
  Matrix variance;
  Design design;
  /// Xᵀ Σ⁻¹ X
  Matrix info;
};

/// n × m design matrix X with rows fᵀ(tⱼ).
inline Matrix design_matrix(const RegressionBasis& basis, const Design& design) {
  Matrix x(static_cast<Eigen::Index>(design.size()), basis.size());
  for (std::size_t j = 0; j < design.size(); ++j) {
    x.row(static_cast<Eigen::Index>(j)) = basis.value(design[j]).transpose();
  }
  return x;
}

namespace detail {

/// Cholesky of Σ; Σ⁻¹ is only ever applied through the factor.
inline Eigen::LLT<Matrix> factor_covariance(const TriangularKernel& kernel, const Design& design) {
  Eigen::LLT<Matrix> llt(covariance_matrix(kernel, design));
  if (llt.info() != Eigen::Success) {
    throw InvalidDesign("covariance matrix of the design is not positive definite");
  }
  return llt;
}

}  // namespace detail

inline WlseResult wlse_variance(const RegressionBasis& basis, const TriangularKernel& kernel,
                                const Design& design) {
  const auto llt = detail::factor_covariance(kernel, design);
  const Matrix z = llt.matrixL().solve(design_matrix(basis, design));
  Matrix info = symmetrize(z.transpose() * z);
  if (numerical_rank(z, 1e-12) < basis.size()) {
    throw SingularModel("design matrix is rank deficient");
  }
  Matrix variance = spd_inverse(info, "X'S^-1X");
  return WlseResult{std::move(variance), design, std::move(info)};
}

/// θ̂ = (Xᵀ Σ⁻¹ X)⁻¹ Xᵀ Σ⁻¹ Y for each column of `observations`.
inline Matrix wlse_estimate(const RegressionBasis& basis, const TriangularKernel& kernel,
                            const Design& design, const Matrix& observations) {
  if (observations.rows() != static_cast<Eigen::Index>(design.size())) {
    throw InvalidInput("observation count does not match design size");
  }
  const auto llt = detail::factor_covariance(kernel, design);
  const Matrix z = llt.matrixL().solve(design_matrix(basis, design));
  const Matrix w = llt.matrixL().solve(observations);
  const Eigen::LDLT<Matrix> normal(z.transpose() * z);
  if (numerical_rank(z, 1e-12) < basis.size()) {
    throw SingularModel("design matrix is rank deficient");
  }
  return normal.solve(z.transpose() * w);
}

inline Vector wlse_estimate(const RegressionBasis& basis, const TriangularKernel& kernel,
                            const Design& design, const Vector& observations) {
  return wlse_estimate(basis, kernel, design, Matrix(observations)).col(0);
}

/// tr(reference) / tr(variance).
inline double efficiency_of(const Matrix& variance, const Matrix& reference_c_inv) {
  return reference_c_inv.trace() / variance.trace();
}

/// det-based efficiency (det(reference)/det(variance))^{1/m}; exposed for
/// completeness, the trace form is the one used throughout.
inline double d_efficiency_of(const Matrix& variance, const Matrix& reference_c_inv) {
  const double m = static_cast<double>(variance.rows());
  return std::pow(reference_c_inv.determinant() / variance.determinant(), 1.0 / m);
}

}  // namespace ctoed

#endif  // CTOED_FINITE_BLUE_HPP
