#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "cdfuse/errors.hpp"

namespace cdfuse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Numerical rank threshold, relative to the largest singular value.
// Separates structural zeros from floating-point noise on noiseless data.
inline constexpr double kDefaultRankTol = 1e-10;

inline void require_finite(const Matrix& a, const std::string& what) {
  if (a.size() == 0) throw dimension_error(what + ": empty matrix");
  if (!a.allFinite()) throw input_error(what + ": non-finite entries");
}

/// Thin SVD truncated to the numerical rank.
struct SvdResult {
  Matrix left;             // I x r, orthonormal columns
  Vector singular_values;  // length r, nonincreasing, positive
  Matrix right;            // J x r, orthonormal columns

  Index rank() const { return singular_values.size(); }

  Matrix reconstruct() const {
    if (rank() == 0) return Matrix::Zero(left.rows(), right.rows());
    return left * singular_values.asDiagonal() * right.transpose();
  }
};

/// Orthonormal basis of a column subspace of R^I.
struct SubspaceBasis {
  Matrix basis;  // I x r, column-orthonormal
  double tol = kDefaultRankTol;

  Index dim() const { return basis.cols(); }
  Index ambient_dim() const { return basis.rows(); }

  // Orthogonal projector onto the spanned subspace.
  Matrix projector() const { return basis * basis.transpose(); }
};

// Deterministic sign convention: flip a vector so that its
// largest-magnitude entry is positive. Ties resolved by the first
// occurrence. Under (near-)ties in singular values only the subspace is
// contractual, not the individual vectors.
inline void canonicalize_column_signs(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    Index imax = 0;
    double amax = -1.0;
    for (Index i = 0; i < m.rows(); ++i) {
      const double a = std::abs(m(i, j));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (m.rows() > 0 && m(imax, j) < 0.0) m.col(j) = -m.col(j);
  }
}

// Paired flip for SVD factors: the left vector fixes the sign, the right
// vector follows so the reconstruction is unchanged.
inline void canonicalize_svd_signs(Matrix& left, Matrix& right) {
  for (Index j = 0; j < left.cols(); ++j) {
    Index imax = 0;
    double amax = -1.0;
    for (Index i = 0; i < left.rows(); ++i) {
      const double a = std::abs(left(i, j));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (left(imax, j) < 0.0) {
      left.col(j) = -left.col(j);
      right.col(j) = -right.col(j);
    }
  }
}

inline SvdResult thin_svd(const Matrix& a, double rank_tol = kDefaultRankTol) {
  require_finite(a, "thin_svd");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Index r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cut = rank_tol * s(0);
    while (r < s.size() && s(r) > cut) ++r;
  }
  SvdResult out;
  out.left = svd.matrixU().leftCols(r);
  out.singular_values = s.head(r);
  out.right = svd.matrixV().leftCols(r);
  canonicalize_svd_signs(out.left, out.right);
  return out;
}

/// Moore-Penrose pseudoinverse via the truncated SVD.
inline Matrix pseudo_inverse(const Matrix& a, double rank_tol = kDefaultRankTol) {
  require_finite(a, "pseudo_inverse");
  const SvdResult svd = thin_svd(a, rank_tol);
  if (svd.rank() == 0) return Matrix::Zero(a.cols(), a.rows());
  return svd.right * svd.singular_values.cwiseInverse().asDiagonal() *
         svd.left.transpose();
}

/// Orthonormal basis for the numerical column space of a.
inline SubspaceBasis orthonormal_basis(const Matrix& a,
                                       double rank_tol = kDefaultRankTol) {
  require_finite(a, "orthonormal_basis");
  SvdResult svd = thin_svd(a, rank_tol);
  canonicalize_column_signs(svd.left);
  return SubspaceBasis{std::move(svd.left), rank_tol};
}

/// Cosines of the principal angles between two subspaces, nonincreasing,
/// length min(dim, dim). Values clamped into [0, 1].
inline Vector principal_angle_cosines(const SubspaceBasis& b1,
                                      const SubspaceBasis& b2) {
  if (b1.ambient_dim() != b2.ambient_dim())
    throw dimension_error("principal_angle_cosines: ambient dimensions differ");
  const Index n = std::min(b1.dim(), b2.dim());
  if (n == 0) return Vector(0);
  Eigen::JacobiSVD<Matrix> svd(b1.basis.transpose() * b2.basis);
  Vector c = svd.singularValues().head(n);
  for (Index i = 0; i < n; ++i) c(i) = std::clamp(c(i), 0.0, 1.0);
  return c;
}

// Largest principal angle (radians) between two subspaces of equal
// dimension; the usual gap measure for "same subspace" assertions.
inline double max_principal_angle(const SubspaceBasis& b1,
                                  const SubspaceBasis& b2) {
  const Vector c = principal_angle_cosines(b1, b2);
  if (c.size() == 0) return 0.0;
  return std::acos(std::clamp(c(c.size() - 1), -1.0, 1.0));
}

}  // namespace cdfuse
