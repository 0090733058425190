#pragma once

#include <string>
#include <vector>

#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"
#include "cdfuse/subspace.hpp"

namespace cdfuse {

/// Weights from the product SVD of the cross-block covariance X2' X1:
/// the top-R right singular vectors weight block 1, the top-R left
/// singular vectors weight block 2.
struct PsvdWeights {
  Matrix block1;  // V_R, J1 x R
  Matrix block2;  // U_R, J2 x R
  Vector singular_values;
};

inline PsvdWeights psvd_weights(const Matrix& x1, const Matrix& x2, Index r,
                                double rank_tol = kDefaultRankTol) {
  require_finite(x1, "psvd_weights");
  require_finite(x2, "psvd_weights");
  if (x1.rows() != x2.rows())
    throw dimension_error("psvd_weights: blocks do not share rows");
  const SvdResult svd = thin_svd(x2.transpose() * x1, rank_tol);
  if (r < 1 || r > svd.rank())
    throw dimension_error("psvd_weights: component count " +
                          std::to_string(r) + " exceeds rank(X2'X1) = " +
                          std::to_string(svd.rank()));
  PsvdWeights w;
  w.block2 = svd.left.leftCols(r);
  w.block1 = svd.right.leftCols(r);
  w.singular_values = svd.singular_values.head(r);
  return w;
}

/// Orthogonal (structured-noise) filtering of one block: components of
/// F = X - X W W' that share the most variation with the preliminary
/// common scores, extracted one at a time with deflation.
struct OrthogonalExtraction {
  Matrix scores;    // T_D, columns mutually orthogonal
  Matrix loadings;  // P_D from the sequential regressions
  Matrix deflated;  // X_res after removing the orthogonal components
};

inline OrthogonalExtraction extract_orthogonal(const Matrix& x,
                                               const Matrix& prelim_scores,
                                               const Matrix& weights,
                                               Index n_orthogonal,
                                               double rank_tol = kDefaultRankTol) {
  require_finite(x, "extract_orthogonal");
  if (n_orthogonal < 0)
    throw input_error("extract_orthogonal: negative component count");
  if (prelim_scores.norm() == 0.0)
    throw input_error("extract_orthogonal: preliminary scores are zero");

  OrthogonalExtraction out;
  out.scores.resize(x.rows(), n_orthogonal);
  out.loadings.resize(x.cols(), n_orthogonal);
  out.deflated = x;
  if (n_orthogonal == 0) {
    return out;
  }

  Matrix f = x - x * weights * weights.transpose();
  const double scale = std::max(x.norm(), 1e-300);
  for (Index l = 0; l < n_orthogonal; ++l) {
    // z maximizing ||T~' F z||^2 over unit z: the top right singular
    // vector of T~' F.
    const SvdResult svd = thin_svd(prelim_scores.transpose() * f, rank_tol);
    if (svd.rank() == 0 || svd.singular_values(0) <= rank_tol * scale * scale)
      throw dimension_error(
          "extract_orthogonal: requested " + std::to_string(n_orthogonal) +
          " components but only " + std::to_string(l) +
          " carry shared variation");
    const Vector z = svd.right.col(0);
    const Vector t = f * z;
    const double tt = t.squaredNorm();
    if (tt <= rank_tol * scale * scale)
      throw dimension_error("extract_orthogonal: degenerate component " +
                            std::to_string(l + 1));
    const Vector loading = out.deflated.transpose() * t / tt;
    out.scores.col(l) = t;
    out.loadings.col(l) = loading;
    out.deflated -= t * loading.transpose();
    f -= t * ((t.transpose() * f) / tt);
  }
  return out;
}

/// Two-block O2PLS model. Each block has its own common score matrix; the
/// common parts use the weights as loadings, so the residual stays
/// orthogonal to the orthogonal-filtered part but not to the common part.
struct O2plsModel {
  Matrix common_scores_1, common_scores_2;    // T_1C, T_2C
  Matrix common_weights_1, common_weights_2;  // W_1, W_2, orthonormal columns
  Matrix ortho_scores_1, ortho_loadings_1;    // T_1D, P_1D
  Matrix ortho_scores_2, ortho_loadings_2;    // T_2D, P_2D
  Matrix common_part_1, common_part_2;        // X_kC = T_kC W_k'
  Matrix ortho_part_1, ortho_part_2;          // X_kD = T_kD P_kD'
  Matrix residual_1, residual_2;              // E_k
  Vector maxdiff_values;                      // covariance value per component
  VarianceTable explained_1, explained_2;
};

inline O2plsModel fit_o2pls(const Matrix& x1, const Matrix& x2, Index r,
                            Index n_orthogonal_1, Index n_orthogonal_2,
                            double rank_tol = kDefaultRankTol) {
  const PsvdWeights prelim = psvd_weights(x1, x2, r, rank_tol);

  const Matrix prelim_scores_1 = x1 * prelim.block1;
  const Matrix prelim_scores_2 = x2 * prelim.block2;
  const OrthogonalExtraction ortho1 = extract_orthogonal(
      x1, prelim_scores_1, prelim.block1, n_orthogonal_1, rank_tol);
  const OrthogonalExtraction ortho2 = extract_orthogonal(
      x2, prelim_scores_2, prelim.block2, n_orthogonal_2, rank_tol);

  O2plsModel model;
  model.ortho_scores_1 = ortho1.scores;
  model.ortho_loadings_1 = ortho1.loadings;
  model.ortho_scores_2 = ortho2.scores;
  model.ortho_loadings_2 = ortho2.loadings;

  // Final common components from the deflated matrices, one by one via
  // MAXDIFF: each pair of weights maximizes the cross-block score
  // covariance, then both blocks are deflated by their own score.
  Matrix res1 = ortho1.deflated;
  Matrix res2 = ortho2.deflated;
  model.common_weights_1.resize(x1.cols(), r);
  model.common_weights_2.resize(x2.cols(), r);
  model.common_scores_1.resize(x1.rows(), r);
  model.common_scores_2.resize(x2.rows(), r);
  model.maxdiff_values.resize(r);
  std::vector<double> trace;
  for (Index a = 0; a < r; ++a) {
    const SvdResult svd = thin_svd(res2.transpose() * res1, rank_tol);
    if (svd.rank() == 0)
      throw convergence_error(
          "fit_o2pls: no cross covariance left at component " +
              std::to_string(a + 1),
          trace);
    trace.push_back(svd.singular_values(0));
    const Vector w1 = svd.right.col(0);
    const Vector w2 = svd.left.col(0);
    const Vector t1 = res1 * w1;
    const Vector t2 = res2 * w2;
    model.common_weights_1.col(a) = w1;
    model.common_weights_2.col(a) = w2;
    model.common_scores_1.col(a) = t1;
    model.common_scores_2.col(a) = t2;
    model.maxdiff_values(a) = t2.dot(t1);
    const double t1n = t1.squaredNorm(), t2n = t2.squaredNorm();
    if (t1n == 0.0 || t2n == 0.0)
      throw convergence_error(
          "fit_o2pls: degenerate score at component " + std::to_string(a + 1),
          trace);
    res1 -= t1 * ((t1.transpose() * res1) / t1n);
    res2 -= t2 * ((t2.transpose() * res2) / t2n);
  }

  model.common_part_1 = model.common_scores_1 * model.common_weights_1.transpose();
  model.common_part_2 = model.common_scores_2 * model.common_weights_2.transpose();
  model.ortho_part_1 = ortho1.scores * ortho1.loadings.transpose();
  model.ortho_part_2 = ortho2.scores * ortho2.loadings.transpose();
  model.residual_1 = x1 - model.common_part_1 - model.ortho_part_1;
  model.residual_2 = x2 - model.common_part_2 - model.ortho_part_2;

  model.explained_1 = variance_decomposition(
      x1, {model.common_part_1, model.ortho_part_1}, {"common", "orthogonal"});
  model.explained_2 = variance_decomposition(
      x2, {model.common_part_2, model.ortho_part_2}, {"common", "orthogonal"});
  return model;
}

/// Semi-orthogonal rotation minimizing ||X2 R - X1||^2, i.e. the classic
/// orthogonal Procrustes solution R = U V' from the SVD of X2' X1. Shares
/// its SVD with the product-SVD weights, which is what ties O2PLS to
/// Procrustes analysis: X2 R V_R = X2 U_R.
inline Matrix procrustes_rotation(const Matrix& x1, const Matrix& x2) {
  require_finite(x1, "procrustes_rotation");
  require_finite(x2, "procrustes_rotation");
  if (x1.rows() != x2.rows())
    throw dimension_error("procrustes_rotation: blocks do not share rows");
  Eigen::JacobiSVD<Matrix> svd(x2.transpose() * x1,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Variance explained in a block by each candidate orthogonal component;
/// a cheap aid for choosing the orthogonal component counts.
inline std::vector<double> orthogonal_component_report(
    const Matrix& x, const Matrix& prelim_scores, const Matrix& weights,
    Index max_candidates, double rank_tol = kDefaultRankTol) {
  std::vector<double> explained;
  const double total = std::max(x.squaredNorm(), 1e-300);
  for (Index l = 1; l <= max_candidates; ++l) {
    try {
      const OrthogonalExtraction e =
          extract_orthogonal(x, prelim_scores, weights, l, rank_tol);
      const Vector t = e.scores.col(l - 1);
      const Vector p = e.loadings.col(l - 1);
      explained.push_back(100.0 * (t * p.transpose()).squaredNorm() / total);
    } catch (const dimension_error&) {
      break;  // no more shared variation to remove
    }
  }
  return explained;
}

}  // namespace cdfuse
