#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"
#include "cdfuse/sca.hpp"
#include "cdfuse/subspace.hpp"

namespace cdfuse {

struct GsvdThresholds {
  double distinct_high = 0.95;  // d^2 at or above this is distinctive
  double common_band = 0.10;    // |d1^2 - d2^2| within this is common

  void validate() const {
    if (!(distinct_high > 0.5 && distinct_high <= 1.0))
      throw config_error("gsvd: distinct_high must be in (0.5, 1]");
    if (!(common_band >= 0.0 && common_band < 1.0))
      throw config_error("gsvd: common_band must be in [0, 1)");
    // Regimes must not overlap: a value classified distinctive cannot
    // simultaneously sit inside the common band.
    if (2.0 * distinct_high - 1.0 <= common_band)
      throw config_error(
          "gsvd: thresholds overlap; require 2*distinct_high - 1 > "
          "common_band");
  }
};

enum class GsvLabel { distinct1, distinct2, common, ambiguous };

inline std::string to_string(GsvLabel label) {
  switch (label) {
    case GsvLabel::distinct1: return "distinct-1";
    case GsvLabel::distinct2: return "distinct-2";
    case GsvLabel::common: return "common";
    case GsvLabel::ambiguous: return "ambiguous";
  }
  return "?";
}

/// Splits the generalized singular value pairs into distinct-1,
/// distinct-2, common, or ambiguous. Ambiguity is surfaced, never folded
/// into a neighboring class.
inline std::vector<GsvLabel> classify_components(
    const Vector& d1, const Vector& d2,
    const GsvdThresholds& thresholds = {}) {
  thresholds.validate();
  if (d1.size() != d2.size())
    throw dimension_error("classify_components: diagonal lengths differ");
  std::vector<GsvLabel> labels;
  for (Index i = 0; i < d1.size(); ++i) {
    const double a = d1(i) * d1(i);
    const double b = d2(i) * d2(i);
    if (std::abs(a + b - 1.0) > 1e-8)
      throw input_error("classify_components: d1^2 + d2^2 != 1 at component " +
                        std::to_string(i + 1));
    if (a >= thresholds.distinct_high) {
      labels.push_back(GsvLabel::distinct1);
    } else if (b >= thresholds.distinct_high) {
      labels.push_back(GsvLabel::distinct2);
    } else if (std::abs(a - b) <= thresholds.common_band) {
      labels.push_back(GsvLabel::common);
    } else {
      labels.push_back(GsvLabel::ambiguous);
    }
  }
  return labels;
}

/// Adapted generalized SVD of two blocks sharing rows: an SCA step
/// filters both blocks to a rank-R model, then the filtered pair is
/// decomposed as X^_k = T D_k V_k' with one shared (full-rank, generally
/// non-orthogonal) score matrix, orthonormal V_k, and D_1^2 + D_2^2 = I.
/// Computed via the CS decomposition of the stacked orthonormal loading
/// factor, which yields the unit-sum property by construction.
struct GsvdModel {
  Matrix shared_scores;       // T, I x R
  Matrix v1, v2;              // J_k x R, orthonormal columns
  Vector d1, d2;              // generalized singular values
  std::vector<GsvLabel> labels;
  Matrix filtered_1, filtered_2;     // SCA-filtered data X^_k
  Matrix common_1, dorth_1, dnon_1;  // per-block parts of the decomposition
  Matrix common_2, dorth_2, dnon_2;
  Matrix ambiguous_1, ambiguous_2;   // components neither rule claimed
  VarianceTable explained_1, explained_2;
  GsvdThresholds thresholds;

  bool has_ambiguous() const {
    for (auto l : labels)
      if (l == GsvLabel::ambiguous) return true;
    return false;
  }

  Index n_components() const { return d1.size(); }
};

namespace detail {

// Fills the columns listed in `missing` with unit vectors orthogonal to
// every other column of m.
inline void complete_orthonormal_columns(Matrix& m,
                                         const std::vector<Index>& missing) {
  if (missing.empty()) return;
  std::vector<Index> present;
  for (Index j = 0; j < m.cols(); ++j) {
    bool is_missing = false;
    for (Index mj : missing) is_missing |= (mj == j);
    if (!is_missing) present.push_back(j);
  }
  Matrix known(m.rows(), static_cast<Index>(present.size()));
  for (std::size_t j = 0; j < present.size(); ++j)
    known.col(static_cast<Index>(j)) = m.col(present[j]);
  // Orthonormal complement via a full QR of the known columns.
  Eigen::HouseholderQR<Matrix> qr(known);
  const Matrix q = qr.householderQ();
  Index next = known.cols();
  for (Index j : missing) {
    if (next >= m.rows())
      throw numerical_error("gsvd: cannot complete orthonormal factor");
    m.col(j) = q.col(next++);
  }
}

}  // namespace detail

inline GsvdModel fit_adapted_gsvd(const Matrix& x1, const Matrix& x2, Index r,
                                  const GsvdThresholds& thresholds = {},
                                  double rank_tol = kDefaultRankTol) {
  thresholds.validate();
  require_finite(x1, "fit_adapted_gsvd");
  require_finite(x2, "fit_adapted_gsvd");
  if (x1.rows() != x2.rows())
    throw dimension_error("fit_adapted_gsvd: blocks do not share rows");
  if (x1.cols() < r || x2.cols() < r)
    throw dimension_error(
        "fit_adapted_gsvd: both blocks need at least R variables for R "
        "orthonormal loading columns");

  const ScaModel sca = fit_sca(std::vector<Matrix>{x1, x2}, r, rank_tol);
  GsvdModel model;
  model.thresholds = thresholds;
  model.filtered_1 = sca.scores * sca.loadings[0].transpose();
  model.filtered_2 = sca.scores * sca.loadings[1].transpose();

  // Stack the per-block loadings and orthonormalize: M = Q Sigma Z'. The
  // row blocks of Q satisfy Q1'Q1 + Q2'Q2 = I, the CS-decomposition
  // input.
  Matrix stacked(x1.cols() + x2.cols(), r);
  stacked << sca.loadings[0], sca.loadings[1];
  const SvdResult msvd = thin_svd(stacked, rank_tol);
  if (msvd.rank() < r)
    throw numerical_error(
        "fit_adapted_gsvd: filtered loadings are rank deficient");
  const Matrix q1 = msvd.left.topRows(x1.cols());
  const Matrix q2 = msvd.left.bottomRows(x2.cols());

  Eigen::JacobiSVD<Matrix> csvd(q1, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector c = csvd.singularValues();  // cosines, nonincreasing
  const Matrix w = csvd.matrixV();   // r x r
  model.v1 = csvd.matrixU();

  // Q2 W has orthogonal columns whose norms are the sines.
  const Matrix y = q2 * w;
  model.v2.resize(x2.cols(), r);
  Vector s(r);
  std::vector<Index> degenerate;
  for (Index j = 0; j < r; ++j) {
    s(j) = y.col(j).norm();
    if (s(j) > 1e-12) {
      model.v2.col(j) = y.col(j) / s(j);
    } else {
      model.v2.col(j).setZero();
      degenerate.push_back(j);
    }
  }
  detail::complete_orthonormal_columns(model.v2, degenerate);

  // Renormalize each (cosine, sine) pair exactly onto the unit circle.
  for (Index j = 0; j < r; ++j) {
    const double h = std::hypot(c(j), s(j));
    c(j) /= h;
    s(j) /= h;
  }
  model.d1 = c;
  model.d2 = s;

  // T = T_sca Z Sigma W reproduces X^_k = T D_k V_k'.
  model.shared_scores =
      sca.scores * msvd.right * msvd.singular_values.asDiagonal() * w;

  model.labels = classify_components(model.d1, model.d2, thresholds);

  auto parts_for = [&](const Matrix& vk, const Vector& dk, GsvLabel own_do,
                       GsvLabel other_do, Matrix& common, Matrix& dorth,
                       Matrix& dnon, Matrix& ambiguous) {
    common = Matrix::Zero(model.shared_scores.rows(), vk.rows());
    dorth = common;
    dnon = common;
    ambiguous = common;
    for (Index j = 0; j < r; ++j) {
      const Matrix piece =
          model.shared_scores.col(j) * dk(j) * vk.col(j).transpose();
      const GsvLabel label = model.labels[static_cast<std::size_t>(j)];
      if (label == own_do)
        dorth += piece;
      else if (label == other_do)
        dnon += piece;
      else if (label == GsvLabel::common)
        common += piece;
      else
        ambiguous += piece;
    }
  };
  parts_for(model.v1, model.d1, GsvLabel::distinct1, GsvLabel::distinct2,
            model.common_1, model.dorth_1, model.dnon_1, model.ambiguous_1);
  parts_for(model.v2, model.d2, GsvLabel::distinct2, GsvLabel::distinct1,
            model.common_2, model.dorth_2, model.dnon_2, model.ambiguous_2);

  auto table_for = [&](const Matrix& x, const Matrix& common,
                       const Matrix& dorth, const Matrix& dnon,
                       const Matrix& ambiguous) {
    std::vector<Matrix> parts{common, dorth, dnon};
    std::vector<std::string> names{"common", "distinct-orthogonal",
                                   "distinct-non-orthogonal"};
    if (model.has_ambiguous()) {
      parts.push_back(ambiguous);
      names.push_back("ambiguous");
    }
    return variance_decomposition(x, parts, names);
  };
  model.explained_1 = table_for(x1, model.common_1, model.dorth_1,
                                model.dnon_1, model.ambiguous_1);
  model.explained_2 = table_for(x2, model.common_2, model.dorth_2,
                                model.dnon_2, model.ambiguous_2);
  return model;
}

}  // namespace cdfuse
