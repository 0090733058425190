#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "cdfuse/block.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"
#include "cdfuse/subspace.hpp"

namespace cdfuse {

inline double pearson_correlation(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw dimension_error("pearson_correlation: length mismatch");
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double denom = ac.norm() * bc.norm();
  if (denom == 0.0) return 0.0;
  return ac.dot(bc) / denom;
}

struct GcaOptions {
  double rank_tol = kDefaultRankTol;
  // Continuum between the correlation-only criterion and the
  // variance-weighted one: the scatter matrix becomes
  // (1-ridge_blend) * sum_k P_k + ridge_blend * sum_k X_k X_k'.
  // 0 keeps the pure canonical-correlation solution. The blend is an
  // interpretation of the cited compromise, not a published formula.
  double ridge_blend = 0.0;
};

/// Generalized canonical correlation: orthonormal consensus components T
/// maximizing agreement with one linear combination per block. For more
/// than two blocks the per-component canonical correlation is the average
/// over all block pairs.
struct GcaModel {
  Matrix consensus_scores;            // T, I x A, orthonormal
  std::vector<Matrix> weights;        // W_k = X_k^+ T
  std::vector<Matrix> block_scores;   // T_k = X_k W_k
  std::vector<Matrix> loadings;       // P_k from regressing X_k on T_k
  Vector canonical_correlations;      // length A, nonincreasing
  Vector eigenvalues;                 // of the scatter matrix, per component
  double criterion_value = 0.0;       // sum_k ||X_k W_k - T||^2 at optimum
  // Explained variance (percent of the block total) of each canonical
  // component within each block; the embeddedness diagnostic.
  std::vector<std::vector<double>> explained_per_block;

  Index n_components() const { return consensus_scores.cols(); }
};

inline GcaModel fit_gca(const std::vector<Matrix>& blocks, Index n_components,
                        const GcaOptions& options = {}) {
  if (blocks.empty()) throw input_error("fit_gca: no blocks");
  const Index n_rows = blocks[0].rows();
  std::vector<SubspaceBasis> ranges;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    require_finite(blocks[k], "fit_gca");
    if (blocks[k].rows() != n_rows)
      throw dimension_error("fit_gca: blocks do not share rows");
    if (blocks[k].cols() >= n_rows && options.ridge_blend == 0.0)
      throw config_error(
          "fit_gca: block " + std::to_string(k + 1) +
          " has at least as many variables as samples; the plain "
          "canonical criterion degenerates there. Reduce the block by a "
          "per-block PCA first (fit_pca_gca) or set a positive ridge "
          "blend.");
    ranges.push_back(orthonormal_basis(blocks[k], options.rank_tol));
  }
  Index min_rank = ranges[0].dim();
  for (const auto& r : ranges) min_rank = std::min(min_rank, r.dim());
  if (n_components < 1 || n_components > min_rank)
    throw dimension_error(
        "fit_gca: component count must be between 1 and the smallest block "
        "rank (" + std::to_string(min_rank) + ")");

  // Z = sum_k X_k (X_k' X_k)^+ X_k', i.e. the sum of the orthogonal
  // projectors onto the block column spaces.
  Matrix scatter = Matrix::Zero(n_rows, n_rows);
  for (const auto& r : ranges) scatter += r.projector();
  if (options.ridge_blend != 0.0) {
    Matrix raw = Matrix::Zero(n_rows, n_rows);
    for (const auto& x : blocks) raw += x * x.transpose();
    scatter = (1.0 - options.ridge_blend) * scatter +
              options.ridge_blend * raw;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
  if (eig.info() != Eigen::Success)
    throw numerical_error("fit_gca: eigendecomposition failed");

  GcaModel model;
  model.consensus_scores.resize(n_rows, n_components);
  model.eigenvalues.resize(n_components);
  for (Index a = 0; a < n_components; ++a) {
    const Index src = n_rows - 1 - a;  // solver sorts ascending
    model.consensus_scores.col(a) = eig.eigenvectors().col(src);
    model.eigenvalues(a) = eig.eigenvalues()(src);
  }
  canonicalize_column_signs(model.consensus_scores);

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    model.weights.push_back(pseudo_inverse(blocks[k], options.rank_tol) *
                            model.consensus_scores);
    model.block_scores.push_back(blocks[k] * model.weights.back());
  }

  // Average pairwise correlation per component.
  model.canonical_correlations.resize(n_components);
  for (Index a = 0; a < n_components; ++a) {
    double sum = 0.0;
    int npairs = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k)
      for (std::size_t l = k + 1; l < blocks.size(); ++l) {
        sum += pearson_correlation(model.block_scores[k].col(a),
                                   model.block_scores[l].col(a));
        ++npairs;
      }
    model.canonical_correlations(a) = npairs > 0 ? sum / npairs : 1.0;
  }

  // Components ordered by canonical correlation, nonincreasing. The
  // eigen order normally agrees; a stable re-sort pins the contract.
  std::vector<Index> order(static_cast<std::size_t>(n_components));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return model.canonical_correlations(a) > model.canonical_correlations(b);
  });
  {
    GcaModel sorted = model;
    for (Index a = 0; a < n_components; ++a) {
      const Index s = order[static_cast<std::size_t>(a)];
      sorted.consensus_scores.col(a) = model.consensus_scores.col(s);
      sorted.eigenvalues(a) = model.eigenvalues(s);
      sorted.canonical_correlations(a) = model.canonical_correlations(s);
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        sorted.weights[k].col(a) = model.weights[k].col(s);
        sorted.block_scores[k].col(a) = model.block_scores[k].col(s);
      }
    }
    model = std::move(sorted);
  }

  double criterion = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k)
    criterion += (model.block_scores[k] - model.consensus_scores).squaredNorm();
  model.criterion_value = criterion;

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Matrix& tk = model.block_scores[k];
    model.loadings.push_back(
        (pseudo_inverse(tk, options.rank_tol) * blocks[k]).transpose());
    std::vector<double> expl;
    const double total = std::max(blocks[k].squaredNorm(), 1e-300);
    for (Index a = 0; a < n_components; ++a) {
      const Vector t = tk.col(a);
      const double tt = t.squaredNorm();
      const double part =
          tt > 0.0 ? (t * (t.transpose() * blocks[k]) / tt).squaredNorm() : 0.0;
      expl.push_back(100.0 * part / total);
    }
    model.explained_per_block.push_back(std::move(expl));
  }
  return model;
}

inline GcaModel fit_gca(const std::vector<DataBlock>& blocks,
                        Index n_components, const GcaOptions& options = {}) {
  require_shared_rows(blocks);
  return fit_gca(block_values(blocks), n_components, options);
}

// ---------------------------------------------------------------------------

struct DistinctParts {
  Matrix scores;    // PCA scores of the deflation residual
  Matrix loadings;  // matching right singular vectors
};

/// Deflates a block against its own common components and extracts the
/// distinct part as a PCA of the residual. The residual is orthogonal to
/// the given scores by construction.
inline DistinctParts extract_distinct(const Matrix& block,
                                      const Matrix& own_common_scores,
                                      double rank_tol = kDefaultRankTol) {
  require_finite(block, "extract_distinct");
  DistinctParts out;
  if (own_common_scores.cols() == 0) {
    const SvdResult svd = thin_svd(block, rank_tol);
    out.scores = svd.left * svd.singular_values.asDiagonal();
    out.loadings = svd.right;
    return out;
  }
  if (own_common_scores.rows() != block.rows())
    throw dimension_error("extract_distinct: score rows != block rows");
  const SvdResult ssvd = thin_svd(own_common_scores, rank_tol);
  if (ssvd.rank() < own_common_scores.cols())
    throw input_error("extract_distinct: common scores are rank deficient");
  const Matrix q = ssvd.left;
  const Matrix residual = block - q * (q.transpose() * block);
  const SvdResult svd = thin_svd(residual, rank_tol);
  out.scores = svd.left * svd.singular_values.asDiagonal();
  out.loadings = svd.right;
  return out;
}

// ---------------------------------------------------------------------------

/// GCA stabilized by a per-block PCA prefilter. Common components are the
/// leading canonical components whose correlation clears the threshold;
/// the distinct space of a block is the PCA of what remains after
/// deflating the block's own common components, so its dimension is the
/// block's PCA rank minus the common count.
struct PcaGcaModel {
  std::vector<Index> pca_ranks;
  std::vector<Matrix> pca_scores;       // S_k = U_k Sigma_k, I x rank_k
  std::vector<Matrix> pca_loadings;     // V_k, J_k x rank_k
  GcaModel gca;                         // fitted on the PCA score blocks
  double corr_threshold = 0.7;
  Index common_count = 0;
  std::vector<Matrix> common_scores;       // per block, I x common_count
  std::vector<Matrix> distinct_scores;     // per block
  std::vector<Matrix> distinct_loadings;   // in original variable space
  std::vector<VarianceTable> explained;    // common/distinct/residual per block
};

inline PcaGcaModel fit_pca_gca(const std::vector<Matrix>& blocks,
                               const std::vector<Index>& pca_ranks,
                               double corr_threshold,
                               const GcaOptions& options = {}) {
  if (blocks.empty()) throw input_error("fit_pca_gca: no blocks");
  if (pca_ranks.size() != blocks.size())
    throw input_error("fit_pca_gca: one PCA rank per block required");
  if (!(corr_threshold > 0.0 && corr_threshold <= 1.0))
    throw config_error("fit_pca_gca: correlation threshold must be in (0, 1]");

  PcaGcaModel model;
  model.corr_threshold = corr_threshold;
  model.pca_ranks = pca_ranks;
  std::vector<Matrix> score_blocks;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const SvdResult svd = thin_svd(blocks[k], options.rank_tol);
    if (pca_ranks[k] < 1 || pca_ranks[k] > svd.rank())
      throw dimension_error("fit_pca_gca: PCA rank for block " +
                            std::to_string(k + 1) + " exceeds block rank " +
                            std::to_string(svd.rank()));
    model.pca_scores.push_back(
        svd.left.leftCols(pca_ranks[k]) *
        svd.singular_values.head(pca_ranks[k]).asDiagonal());
    model.pca_loadings.push_back(svd.right.leftCols(pca_ranks[k]));
    score_blocks.push_back(model.pca_scores.back());
  }

  Index max_components = pca_ranks[0];
  for (Index r : pca_ranks) max_components = std::min(max_components, r);
  model.gca = fit_gca(score_blocks, max_components, options);

  Index common = 0;
  while (common < max_components &&
         model.gca.canonical_correlations(common) >= corr_threshold)
    ++common;
  model.common_count = common;

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    model.common_scores.push_back(
        model.gca.block_scores[k].leftCols(common));
    // Filtered block in original variable space, rank = PCA rank.
    const Matrix filtered =
        model.pca_scores[k] * model.pca_loadings[k].transpose();
    const DistinctParts distinct =
        extract_distinct(filtered, model.common_scores[k], options.rank_tol);
    model.distinct_scores.push_back(distinct.scores);
    model.distinct_loadings.push_back(distinct.loadings);

    // Common part via regression of the filtered block on the common
    // scores; the distinct part is the rest of the filtered block.
    Matrix common_part = Matrix::Zero(blocks[k].rows(), blocks[k].cols());
    if (common > 0) {
      const Matrix& tc = model.common_scores[k];
      common_part = tc * (pseudo_inverse(tc, options.rank_tol) * filtered);
    }
    const Matrix distinct_part = filtered - common_part;
    model.explained.push_back(variance_decomposition(
        blocks[k], {common_part, distinct_part}, {"common", "distinct"}));
  }
  return model;
}

inline PcaGcaModel fit_pca_gca(const std::vector<DataBlock>& blocks,
                               const std::vector<Index>& pca_ranks,
                               double corr_threshold,
                               const GcaOptions& options = {}) {
  require_shared_rows(blocks);
  return fit_pca_gca(block_values(blocks), pca_ranks, corr_threshold, options);
}

}  // namespace cdfuse
