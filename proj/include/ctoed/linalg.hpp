#ifndef CTOED_LINALG_HPP
#define CTOED_LINALG_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "ctoed/error.hpp"

namespace ctoed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Inverse of a symmetric positive-definite matrix through its Cholesky
/// factor. Throws SingularModel when the factorization fails; never
/// regularizes.
inline Matrix spd_inverse(const Matrix& a, const std::string& what = "matrix") {
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) {
    throw SingularModel(what + " is not positive definite");
  }
  const Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  if (!inv.allFinite()) {
    throw SingularModel(what + " is numerically singular");
  }
  return symmetrize(inv);
}

/// Singular values below `rel_cutoff` times the largest are treated as zero.
inline int numerical_rank(const Matrix& a, double rel_cutoff = 1e-10) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double largest = s.size() ? s(0) : 0.0;
  if (largest <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_cutoff * largest) ++rank;
  }
  return rank;
}

/// Moore–Penrose pseudo-inverse via SVD with a relative cutoff.
inline Matrix pseudo_inverse(const Matrix& a, double rel_cutoff = 1e-10) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double largest = s.size() ? s(0) : 0.0;
  Vector inv_s = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (largest > 0.0 && s(i) > rel_cutoff * largest) inv_s(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().transpose();
}

inline double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

/// True when a − b is positive semi-definite up to `tol` (absolute, on the
/// smallest eigenvalue).
inline bool loewner_geq(const Matrix& a, const Matrix& b, double tol = 1e-9) {
  return min_eigenvalue(a - b) >= -tol;
}

inline double max_abs(const Matrix& a) {
  return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace ctoed

#endif  // CTOED_LINALG_HPP
