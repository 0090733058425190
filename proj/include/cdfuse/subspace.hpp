#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"

namespace cdfuse {

enum class Orthogonality { none, orthogonal };

// Variants for placing the distinct-orthogonal (DO) part. The letters
// follow the nesting of the alternatives: a0x variants impose nothing on
// the distinct space itself, a1x variants require distinct perpendicular
// to common first.
//   a01: DO_1 perpendicular to DO_2 only (mutual choice)
//   a02: DO_1 perpendicular to the other block's whole distinct space
//   a03: DO_1 perpendicular to the other block entirely
//   a10: DO inherits distinct-perp-common, no cross-block requirement
//   a11: distinct-perp-common plus mutual DO_1 perp DO_2
enum class DoVariant { a01, a02, a03, a10, a11 };

struct OrthogonalityScheme {
  Orthogonality distinct_vs_common = Orthogonality::orthogonal;
  Orthogonality distinct_vs_distinct = Orthogonality::none;
  Orthogonality distinct_vs_other_block = Orthogonality::none;
  DoVariant do_variant = DoVariant::a10;

  void validate() const {
    const bool a1 = distinct_vs_common == Orthogonality::orthogonal;
    const bool a2 = distinct_vs_distinct == Orthogonality::orthogonal;
    const bool a3 = distinct_vs_other_block == Orthogonality::orthogonal;
    if (a3 && !(a1 && a2))
      throw config_error(
          "scheme: distinct-vs-other-block orthogonality implies both "
          "distinct-vs-common and distinct-vs-distinct orthogonality");
    switch (do_variant) {
      case DoVariant::a01:
      case DoVariant::a02:
        if (a1)
          throw config_error(
              "scheme: a0x DO variants require no distinct-vs-common "
              "orthogonality; use a10/a11 instead");
        break;
      case DoVariant::a03:
        break;  // maximal orthogonality, consistent with every level
      case DoVariant::a10:
      case DoVariant::a11:
        if (!a1)
          throw config_error(
              "scheme: a1x DO variants require distinct-vs-common "
              "orthogonality");
        break;
    }
  }
};

inline OrthogonalityScheme scheme_distinct_orthogonal_to_common() {
  return OrthogonalityScheme{};  // defaults encode this case
}

inline OrthogonalityScheme scheme_no_orthogonality() {
  OrthogonalityScheme s;
  s.distinct_vs_common = Orthogonality::none;
  s.do_variant = DoVariant::a01;
  return s;
}

// ---------------------------------------------------------------------------
// Common / distinct split of a single block.

struct CommonDistinctSplit {
  Matrix common_part;    // X_C
  Matrix distinct_part;  // X_D, with X = X_C + X_D on the model part
  SubspaceBasis common_basis;
  SubspaceBasis distinct_basis;
};

/// Splits a block against a given common subspace. Under an orthogonal
/// scheme X_C is the orthogonal projection onto the common space and
/// X_D = X - X_C, so X_C' * X_D = 0. Under a non-orthogonal scheme the
/// distinct part may span any complement; the caller can pass one
/// explicitly, otherwise the orthogonal complement within R(X) is used
/// (it is a valid complement too).
inline CommonDistinctSplit split_common_distinct(
    const Matrix& x, const SubspaceBasis& common,
    const OrthogonalityScheme& scheme,
    const Matrix* distinct_complement = nullptr) {
  scheme.validate();
  require_finite(x, "split_common_distinct");
  if (common.ambient_dim() != x.rows())
    throw dimension_error("split_common_distinct: basis rows != block rows");

  const SubspaceBasis range = orthonormal_basis(x, common.tol);
  if (common.dim() > range.dim())
    throw dimension_error(
        "split_common_distinct: common dimension exceeds block rank");

  // Project the common basis into R(X) when it is not already inside.
  SubspaceBasis inside = common;
  if (common.dim() > 0) {
    const Matrix projected = range.projector() * common.basis;
    inside = orthonormal_basis(projected, common.tol);
    if (inside.dim() != common.dim())
      throw dimension_error(
          "split_common_distinct: common basis collapses when projected "
          "into the block range");
  }

  CommonDistinctSplit out;
  out.common_basis = inside;

  const bool orthogonal =
      scheme.distinct_vs_common == Orthogonality::orthogonal ||
      distinct_complement == nullptr;
  if (orthogonal) {
    out.common_part = inside.dim() == 0
                          ? Matrix::Zero(x.rows(), x.cols())
                          : Matrix(inside.projector() * x);
    out.distinct_part = x - out.common_part;
    out.distinct_basis = orthonormal_basis(out.distinct_part, common.tol);
    if (out.distinct_basis.dim() == 0)
      out.distinct_basis.basis = Matrix::Zero(x.rows(), 0);
    return out;
  }

  // Oblique split along a caller-chosen complement: decompose every column
  // of X uniquely over [common | complement].
  const SubspaceBasis comp = orthonormal_basis(*distinct_complement, common.tol);
  Matrix joint(x.rows(), inside.dim() + comp.dim());
  joint << inside.basis, comp.basis;
  const SvdResult jsvd = thin_svd(joint, common.tol);
  if (jsvd.rank() < joint.cols())
    throw dimension_error(
        "split_common_distinct: common space and complement are not "
        "linearly independent");
  const Matrix coef = pseudo_inverse(joint, common.tol) * x;
  out.common_part = inside.basis * coef.topRows(inside.dim());
  out.distinct_part = comp.basis * coef.bottomRows(comp.dim());
  out.distinct_basis = comp;
  return out;
}

// ---------------------------------------------------------------------------
// DO / DNO split of a distinct space.

struct DoDnoSplit {
  SubspaceBasis distinct_orthogonal;      // DO
  SubspaceBasis distinct_non_orthogonal;  // DNO, complement of DO
};

/// Splits a distinct space into the part orthogonal to a context subspace
/// (the other block's DO part, distinct part, or whole block, depending on
/// the scheme's DO variant) and the remainder. The DO part may be empty
/// when the dimensions forbid the split.
inline DoDnoSplit split_distinct_orthogonal(const SubspaceBasis& distinct,
                                            const SubspaceBasis& context,
                                            const OrthogonalityScheme& scheme) {
  scheme.validate();
  if (distinct.ambient_dim() != context.ambient_dim())
    throw dimension_error("split_distinct_orthogonal: ambient dims differ");

  DoDnoSplit out;
  if (distinct.dim() == 0) {
    out.distinct_orthogonal.basis = Matrix::Zero(distinct.ambient_dim(), 0);
    out.distinct_non_orthogonal.basis = Matrix::Zero(distinct.ambient_dim(), 0);
    return out;
  }
  if (context.dim() == 0) {
    out.distinct_orthogonal = distinct;
    out.distinct_non_orthogonal.basis = Matrix::Zero(distinct.ambient_dim(), 0);
    return out;
  }

  // v = B z lies in span(B) and is orthogonal to span(C) iff (C'B) z = 0,
  // so the DO coordinates are the null space of C'B and DNO its
  // orthogonal complement in coordinate space.
  const Matrix g = context.basis.transpose() * distinct.basis;
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cut =
      (s.size() > 0 && s(0) > 0.0) ? std::max(distinct.tol, 1e-12) * s(0) : 0.0;
  Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;

  const Matrix v = svd.matrixV();
  Matrix null_basis = v.rightCols(distinct.dim() - rank);
  Matrix row_basis = v.leftCols(rank);
  Matrix dorth = distinct.basis * null_basis;
  Matrix dnon = distinct.basis * row_basis;
  canonicalize_column_signs(dorth);
  canonicalize_column_signs(dnon);
  out.distinct_orthogonal = SubspaceBasis{std::move(dorth), distinct.tol};
  out.distinct_non_orthogonal = SubspaceBasis{std::move(dnon), distinct.tol};
  return out;
}

// ---------------------------------------------------------------------------
// The 2D-2D construction: exactly one orthogonal partner.

/// Given two 2-dimensional subspaces with rank(A'B) = 2 and a nonzero x in
/// span(A), returns the unique (up to scale) y in span(B) with x'y = 0.
/// The construction is t = U'u with U = A'B and y = B (t2, -t1)'.
inline Vector orthogonal_pair_2d(const SubspaceBasis& a, const SubspaceBasis& b,
                                 const Vector& x) {
  if (a.ambient_dim() != b.ambient_dim())
    throw dimension_error("orthogonal_pair_2d: ambient dims differ");
  if (a.dim() != 2 || b.dim() != 2)
    throw input_error("orthogonal_pair_2d: both subspaces must be 2-D");
  if (x.size() != a.ambient_dim())
    throw dimension_error("orthogonal_pair_2d: vector length mismatch");

  const double xnorm = x.norm();
  if (xnorm == 0.0) throw input_error("orthogonal_pair_2d: x is zero");
  const Vector u = a.basis.transpose() * x;
  if ((a.basis * u - x).norm() > 1e-8 * xnorm)
    throw input_error("orthogonal_pair_2d: x does not lie in span(A)");

  const Matrix cross = a.basis.transpose() * b.basis;  // U, 2x2
  Eigen::JacobiSVD<Matrix> svd(cross);
  const Vector& s = svd.singularValues();
  if (s(1) <= 1e-12 * std::max(1.0, s(0)))
    throw input_error("orthogonal_pair_2d: rank(A'B) < 2");

  const Vector t = cross.transpose() * u;
  Vector v(2);
  v << t(1), -t(0);
  Vector y = b.basis * v;
  y /= y.norm();
  // Deterministic orientation.
  Index imax;
  y.cwiseAbs().maxCoeff(&imax);
  if (y(imax) < 0.0) y = -y;
  return y;
}

/// Mutual DO choice between two distinct spaces (variants a01/a11):
/// principal directions meeting at right angles pair up directly; if both
/// leftovers are 2-D the unique-orthogonal-partner construction adds one
/// more pair, anchored at the least-aligned leftover direction.
inline std::pair<DoDnoSplit, DoDnoSplit> mutual_distinct_orthogonal(
    const SubspaceBasis& d1, const SubspaceBasis& d2, double tol = 1e-8) {
  if (d1.ambient_dim() != d2.ambient_dim())
    throw dimension_error("mutual_distinct_orthogonal: ambient dims differ");
  const Index ambient = d1.ambient_dim();

  if (d1.dim() == 0 || d2.dim() == 0) {
    // Orthogonality against an empty space is vacuous: everything is DO.
    DoDnoSplit s1{d1, SubspaceBasis{Matrix::Zero(ambient, 0), d1.tol}};
    DoDnoSplit s2{d2, SubspaceBasis{Matrix::Zero(ambient, 0), d2.tol}};
    return {s1, s2};
  }

  std::vector<Vector> do1, do2;

  Eigen::JacobiSVD<Matrix> svd(d1.basis.transpose() * d2.basis,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& c = svd.singularValues();
  const Index npairs = std::min(d1.dim(), d2.dim());
  std::vector<Index> nz;  // interacting principal pairs (nonzero cosine)
  for (Index i = 0; i < npairs; ++i) {
    if (c(i) <= tol) {
      // Right-angle principal pair: both directions are mutually
      // orthogonal DO members.
      do1.push_back(d1.basis * svd.matrixU().col(i));
      do2.push_back(d2.basis * svd.matrixV().col(i));
    } else {
      nz.push_back(i);
    }
  }
  // Directions beyond the interacting pairs are orthogonal to the whole
  // other space and join DO directly.
  for (Index i = npairs; i < d1.dim(); ++i)
    do1.push_back(d1.basis * svd.matrixU().col(i));
  for (Index i = npairs; i < d2.dim(); ++i)
    do2.push_back(d2.basis * svd.matrixV().col(i));

  Matrix rest1(ambient, static_cast<Index>(nz.size()));
  Matrix rest2(ambient, static_cast<Index>(nz.size()));
  for (std::size_t j = 0; j < nz.size(); ++j) {
    rest1.col(static_cast<Index>(j)) = d1.basis * svd.matrixU().col(nz[j]);
    rest2.col(static_cast<Index>(j)) = d2.basis * svd.matrixV().col(nz[j]);
  }

  if (rest1.cols() == 2) {
    const SubspaceBasis a{rest1, d1.tol}, b{rest2, d2.tol};
    // Least-aligned leftover principal direction of span(A) vs span(B):
    // with the principal ordering above that is the last column.
    const Vector x = rest1.col(1);
    const Vector y = orthogonal_pair_2d(a, b, x);
    do1.push_back(x);
    do2.push_back(y);
  }

  auto to_basis = [&](const std::vector<Vector>& cols) {
    Matrix m(ambient, static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
      m.col(static_cast<Index>(j)) = cols[j];
    return orthonormal_basis(m.cols() > 0 ? m : Matrix::Zero(ambient, 0),
                             kDefaultRankTol);
  };

  auto complement_within = [&](const SubspaceBasis& whole,
                               const SubspaceBasis& part) {
    if (part.dim() == 0) return whole;
    Matrix residual = whole.basis - part.projector() * whole.basis;
    SubspaceBasis dno = orthonormal_basis(residual, 1e-8);
    return dno;
  };

  DoDnoSplit s1, s2;
  s1.distinct_orthogonal =
      do1.empty() ? SubspaceBasis{Matrix::Zero(ambient, 0), d1.tol}
                  : to_basis(do1);
  s2.distinct_orthogonal =
      do2.empty() ? SubspaceBasis{Matrix::Zero(ambient, 0), d2.tol}
                  : to_basis(do2);
  s1.distinct_non_orthogonal = complement_within(d1, s1.distinct_orthogonal);
  s2.distinct_non_orthogonal = complement_within(d2, s2.distinct_orthogonal);
  return {s1, s2};
}

// ---------------------------------------------------------------------------
// Variance bookkeeping.

enum class VarianceKind { ss, ess };

struct VarianceEntry {
  std::string name;
  double value = 0.0;    // SS or ESS
  double percent = 0.0;  // of the block total
  VarianceKind kind = VarianceKind::ss;
};

struct VarianceTable {
  double block_total = 0.0;  // ||X||^2
  std::vector<VarianceEntry> entries;  // parts in order, then "residual"
  bool order_sensitive = false;        // true iff any ESS entry present

  double sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.value;
    return s;
  }
};

/// Decomposes ||X||^2 over an ordered list of parts. When the parts (and
/// the residual) are mutually orthogonal the entries are plain sums of
/// squares. Otherwise each entry is the extra sum of squares after
/// orthogonalizing against all preceding parts, which makes the table
/// order-sensitive; entries plus residual always reproduce the block
/// total.
inline VarianceTable variance_decomposition(
    const Matrix& x, const std::vector<Matrix>& parts,
    std::vector<std::string> names = {}) {
  require_finite(x, "variance_decomposition");
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (parts[i].rows() != x.rows() || parts[i].cols() != x.cols())
      throw dimension_error("variance_decomposition: part " +
                            std::to_string(i + 1) + " has wrong shape");
  if (names.empty())
    for (std::size_t i = 0; i < parts.size(); ++i)
      names.push_back("part" + std::to_string(i + 1));
  if (names.size() != parts.size())
    throw input_error("variance_decomposition: name count mismatch");

  VarianceTable table;
  table.block_total = x.squaredNorm();
  const double scale = std::max(table.block_total, 1e-300);

  Matrix model = Matrix::Zero(x.rows(), x.cols());
  for (const auto& p : parts) model += p;
  const Matrix residual = x - model;

  bool orthogonal = true;
  for (std::size_t i = 0; i < parts.size() && orthogonal; ++i) {
    for (std::size_t j = i + 1; j < parts.size() && orthogonal; ++j) {
      const double dot = (parts[i].transpose() * parts[j]).trace();
      if (std::abs(dot) > 1e-9 * scale) orthogonal = false;
    }
    const double rdot = (parts[i].transpose() * residual).trace();
    if (std::abs(rdot) > 1e-9 * scale) orthogonal = false;
  }

  const double pct = 100.0 / std::max(table.block_total, 1e-300);
  if (orthogonal) {
    for (std::size_t i = 0; i < parts.size(); ++i)
      table.entries.push_back({names[i], parts[i].squaredNorm(),
                               parts[i].squaredNorm() * pct, VarianceKind::ss});
    table.entries.push_back({"residual", residual.squaredNorm(),
                             residual.squaredNorm() * pct, VarianceKind::ss});
    table.order_sensitive = false;
    return table;
  }

  // ESS path: project X onto the growing span of the parts' column spaces;
  // each entry is the increase in projected energy.
  table.order_sensitive = true;
  Matrix q(x.rows(), 0);
  double projected_prev = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    Matrix fresh = parts[i];
    if (q.cols() > 0) fresh -= q * (q.transpose() * fresh);
    const SubspaceBasis add = orthonormal_basis(
        fresh.norm() > 0 ? fresh : Matrix::Zero(x.rows(), 1), 1e-10);
    if (add.dim() > 0) {
      Matrix grown(x.rows(), q.cols() + add.dim());
      grown << q, add.basis;
      q = std::move(grown);
    }
    const double projected = (q.transpose() * x).squaredNorm();
    table.entries.push_back({names[i], projected - projected_prev,
                             (projected - projected_prev) * pct,
                             VarianceKind::ess});
    projected_prev = projected;
  }
  table.entries.push_back({"residual", table.block_total - projected_prev,
                           (table.block_total - projected_prev) * pct,
                           VarianceKind::ess});
  return table;
}

}  // namespace cdfuse
