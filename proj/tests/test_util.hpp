#pragma once

// Shared fixtures and, more importantly, the independent oracles the unit
// and acceptance suites check the library against. The oracles stay on
// deliberately different implementation paths: hand-rolled Gram-Schmidt,
// Gaussian elimination and a cyclic Jacobi eigensolver instead of the
// library's SVD-based routines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cdfuse/linalg.hpp"

namespace testutil {

using cdfuse::Index;
using cdfuse::Matrix;
using cdfuse::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  return m;
}

inline Matrix random_orthogonal(Index n, std::uint64_t seed) {
  const Matrix g = random_matrix(n, n, seed);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

// Well-conditioned random nonsingular matrix (condition number <= 4).
inline Matrix random_nonsingular(Index n, std::uint64_t seed) {
  const Matrix q1 = random_orthogonal(n, seed);
  const Matrix q2 = random_orthogonal(n, seed + 1);
  Vector d(n);
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  for (Index i = 0; i < n; ++i) d(i) = unif(rng);
  return q1 * d.asDiagonal() * q2;
}

// --- Oracle: modified Gram-Schmidt orthonormalization -----------------------

inline Matrix gram_schmidt(const Matrix& a, double tol = 1e-10) {
  Matrix q(a.rows(), a.cols());
  Index r = 0;
  const double scale = a.norm();
  for (Index j = 0; j < a.cols(); ++j) {
    Vector v = a.col(j);
    for (Index i = 0; i < r; ++i) v -= q.col(i) * q.col(i).dot(v);
    for (Index i = 0; i < r; ++i) v -= q.col(i) * q.col(i).dot(v);  // repass
    const double n = v.norm();
    if (n > tol * (scale > 0 ? scale : 1.0)) q.col(r++) = v / n;
  }
  return q.leftCols(r);
}

// --- Oracle: rank by Gaussian elimination with partial pivoting -------------

inline int row_reduction_rank(Matrix m, double tol = 1e-10) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  int rank = 0;
  Index row = 0;
  for (Index col = 0; col < m.cols() && row < m.rows(); ++col) {
    Index pivot = row;
    for (Index i = row + 1; i < m.rows(); ++i)
      if (std::abs(m(i, col)) > std::abs(m(pivot, col))) pivot = i;
    if (std::abs(m(pivot, col)) <= tol * scale) continue;
    m.row(pivot).swap(m.row(row));
    for (Index i = row + 1; i < m.rows(); ++i) {
      const double f = m(i, col) / m(row, col);
      m.row(i) -= f * m.row(row);
    }
    ++row;
    ++rank;
  }
  return rank;
}

// --- Oracle: cyclic Jacobi eigenvalues of a symmetric matrix ----------------

inline std::vector<double> jacobi_eigenvalues(Matrix a, int sweeps = 64) {
  const Index n = a.rows();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26 * std::max(1.0, a.squaredNorm())) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Matrix j = Matrix::Identity(n, n);
        j(p, p) = c;
        j(q, q) = c;
        j(p, q) = s;
        j(q, p) = -s;
        a = j.transpose() * a * j;
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

// --- Oracle: principal angle cosines via Gram-Schmidt + Jacobi --------------

inline std::vector<double> principal_cosines_oracle(const Matrix& a,
                                                    const Matrix& b) {
  const Matrix qa = gram_schmidt(a);
  const Matrix qb = gram_schmidt(b);
  const Matrix cross = qa.transpose() * qb;
  // Singular values of cross = sqrt of eigenvalues of cross' cross.
  const Matrix gram = cross.transpose() * cross;
  std::vector<double> eig = jacobi_eigenvalues(gram);
  std::vector<double> cosines;
  const std::size_t n = static_cast<std::size_t>(
      std::min(qa.cols(), qb.cols()));
  for (std::size_t i = 0; i < n; ++i)
    cosines.push_back(std::sqrt(std::max(0.0, eig[i])));
  return cosines;
}

// --- Oracle: sequential-projection extra sums of squares --------------------

// Computes ESS entries by explicit Gram-Schmidt growth of the projection
// space, independent of the library's implementation.
inline std::vector<double> sequential_ess_oracle(
    const Matrix& x, const std::vector<Matrix>& parts) {
  std::vector<double> ess;
  Matrix pool(x.rows(), 0);
  double prev = 0.0;
  for (const auto& part : parts) {
    Matrix grown(x.rows(), pool.cols() + part.cols());
    grown << pool, part;
    pool = gram_schmidt(grown);
    const double projected = (pool.transpose() * x).squaredNorm();
    ess.push_back(projected - prev);
    prev = projected;
  }
  return ess;
}

// --- Oracle: brute-force search on the unit circle of a 2-D subspace --------

// Minimizes |x' y(theta)| over y(theta) = B (cos theta, sin theta)' by a
// coarse grid plus golden-section refinement.
inline Vector unit_circle_orthogonal_oracle(const Matrix& b, const Vector& x) {
  auto value = [&](double theta) {
    Vector y = b.col(0) * std::cos(theta) + b.col(1) * std::sin(theta);
    return std::abs(x.dot(y));
  };
  double best_theta = 0.0;
  double best = value(0.0);
  const int grid = 20000;
  for (int i = 1; i < grid; ++i) {
    const double theta = M_PI * i / grid;  // half circle: y and -y tie
    const double v = value(theta);
    if (v < best) {
      best = v;
      best_theta = theta;
    }
  }
  double lo = best_theta - M_PI / grid, hi = best_theta + M_PI / grid;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + 0.382 * (hi - lo);
    const double m2 = lo + 0.618 * (hi - lo);
    if (value(m1) < value(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double theta = 0.5 * (lo + hi);
  Vector y = b.col(0) * std::cos(theta) + b.col(1) * std::sin(theta);
  Index imax;
  y.cwiseAbs().maxCoeff(&imax);
  if (y(imax) < 0.0) y = -y;
  return y;
}

}  // namespace testutil
