#pragma once

#include <string>
#include <vector>

#include "cdfuse/block.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"
#include "cdfuse/subspace.hpp"

namespace cdfuse {

/// Simultaneous component analysis of column-concatenated blocks: one
/// orthonormal score matrix shared by every block, per-block loadings from
/// regression. The least-squares property holds jointly over the blocks,
/// not per block.
struct ScaModel {
  Matrix scores;                      // T, I x R, orthonormal columns
  std::vector<Matrix> loadings;       // P_k, J_k x R
  std::vector<Matrix> backprojected;  // T~_k = X_k X_k^+ T, inside R(X_k)
  Vector singular_values;             // of the concatenation, length R
  double concat_total_ss = 0.0;
  std::vector<double> block_total_ss;
  std::vector<Index> block_cols;
  std::vector<VarianceTable> explained;  // per block, one entry per component

  Index n_components() const { return scores.cols(); }
  Index n_blocks() const { return static_cast<Index>(loadings.size()); }

  // Stacked loading matrix [P_1; ...; P_K], (sum J_k) x R.
  Matrix stacked_loadings() const {
    Index total = 0;
    for (const auto& p : loadings) total += p.rows();
    Matrix out(total, scores.cols());
    Index at = 0;
    for (const auto& p : loadings) {
      out.middleRows(at, p.rows()) = p;
      at += p.rows();
    }
    return out;
  }
};

inline ScaModel fit_sca(const std::vector<Matrix>& blocks, Index n_components,
                        double rank_tol = kDefaultRankTol) {
  const Matrix concat = concatenate_columns(blocks);
  require_finite(concat, "fit_sca");
  const SvdResult svd = thin_svd(concat, rank_tol);
  if (n_components < 1 || n_components > svd.rank())
    throw dimension_error("fit_sca: component count " +
                          std::to_string(n_components) +
                          " exceeds the concatenation rank " +
                          std::to_string(svd.rank()));

  ScaModel model;
  model.scores = svd.left.leftCols(n_components);
  model.singular_values = svd.singular_values.head(n_components);
  model.concat_total_ss = concat.squaredNorm();
  for (const auto& x : blocks) {
    model.block_cols.push_back(x.cols());
    model.block_total_ss.push_back(x.squaredNorm());
    model.loadings.push_back(x.transpose() * model.scores);
    // T~_k = X_k X_k^+ T: the shared scores projected into this block's
    // column space.
    const SubspaceBasis range = orthonormal_basis(x, rank_tol);
    model.backprojected.push_back(range.projector() * model.scores);
  }

  // Per-block variance tables, one rank-one part per component. The score
  // columns are orthonormal and the residual is orthogonal to the model
  // part, so these are plain SS entries.
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    std::vector<Matrix> parts;
    std::vector<std::string> names;
    for (Index r = 0; r < n_components; ++r) {
      parts.push_back(model.scores.col(r) *
                      model.loadings[k].col(r).transpose());
      names.push_back("component" + std::to_string(r + 1));
    }
    model.explained.push_back(
        variance_decomposition(blocks[k], parts, names));
  }
  return model;
}

inline ScaModel fit_sca(const std::vector<DataBlock>& blocks,
                        Index n_components,
                        double rank_tol = kDefaultRankTol) {
  require_shared_rows(blocks);
  return fit_sca(block_values(blocks), n_components, rank_tol);
}

struct ScreeRow {
  Index component = 0;
  double overall_percent = 0.0;     // of total concatenated SS
  double cumulative_percent = 0.0;  // nondecreasing
  std::vector<double> per_block_percent;
};

/// Explained-variance table for choosing the number of components: the
/// cumulative curve over the concatenation plus per-block bars (which need
/// not be monotone).
inline std::vector<ScreeRow> scree_table(const ScaModel& model) {
  std::vector<ScreeRow> rows;
  double cumulative = 0.0;
  for (Index r = 0; r < model.n_components(); ++r) {
    ScreeRow row;
    row.component = r + 1;
    const double s2 = model.singular_values(r) * model.singular_values(r);
    row.overall_percent = 100.0 * s2 / model.concat_total_ss;
    cumulative += row.overall_percent;
    row.cumulative_percent = cumulative;
    for (std::size_t k = 0; k < model.loadings.size(); ++k) {
      row.per_block_percent.push_back(
          100.0 * model.loadings[k].col(r).squaredNorm() /
          model.block_total_ss[k]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cdfuse
