#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"
#include "cdfuse/parallel.hpp"
#include "cdfuse/sca.hpp"
#include "cdfuse/subspace.hpp"

namespace cdfuse {

struct JiveOptions {
  double convergence_tol = 1e-9;  // relative decrease of the total residual
  int max_iterations = 500;
  double rank_tol = kDefaultRankTol;
};

/// Joint-plus-individual decomposition: one shared joint score matrix,
/// per-block individual structures kept orthogonal to the joint scores.
/// Individual spaces of different blocks are not constrained against each
/// other. The residual is not orthogonal to the model parts, so variance
/// tables are always order-sensitive (ESS).
struct JiveModel {
  Matrix joint_scores;                   // T_C, I x joint_rank, orthonormal
  std::vector<Matrix> joint_loadings;    // P_kC
  std::vector<Matrix> individual_scores;    // T_kD
  std::vector<Matrix> individual_loadings;  // P_kD
  std::vector<Matrix> residuals;
  std::vector<double> fit_history;  // total squared residual per iteration
  Index joint_rank = 0;
  std::vector<Index> individual_ranks;
  std::vector<VarianceTable> explained;
  bool converged = false;
  int iterations = 0;

  Matrix joint_part(std::size_t k) const {
    if (joint_rank == 0)
      return Matrix::Zero(joint_scores.rows(), joint_loadings[k].rows());
    return joint_scores * joint_loadings[k].transpose();
  }
  Matrix individual_part(std::size_t k) const {
    return individual_scores[k] * individual_loadings[k].transpose();
  }
};

namespace detail {

struct Rank1Truncation {
  Matrix scores;    // U Sigma
  Matrix loadings;  // V
};

inline Rank1Truncation truncated_pca(const Matrix& m, Index rank,
                                     double rank_tol) {
  Rank1Truncation out;
  if (rank == 0 || m.size() == 0) {
    out.scores = Matrix::Zero(m.rows(), 0);
    out.loadings = Matrix::Zero(m.cols(), 0);
    return out;
  }
  const SvdResult svd = thin_svd(m, rank_tol);
  const Index keep = std::min(rank, svd.rank());
  out.scores = svd.left.leftCols(keep) *
               svd.singular_values.head(keep).asDiagonal();
  out.loadings = svd.right.leftCols(keep);
  if (keep < rank) {
    // Structure ran out before the requested rank; keep the columns we
    // have, padded with zeros so shapes stay as configured.
    Matrix s = Matrix::Zero(m.rows(), rank);
    Matrix l = Matrix::Zero(m.cols(), rank);
    s.leftCols(keep) = out.scores;
    l.leftCols(keep) = out.loadings;
    out.scores = std::move(s);
    out.loadings = std::move(l);
  }
  return out;
}

}  // namespace detail

inline JiveModel fit_jive(const std::vector<Matrix>& blocks, Index joint_rank,
                          const std::vector<Index>& individual_ranks,
                          const JiveOptions& options = {}) {
  if (blocks.empty()) throw input_error("fit_jive: no blocks");
  if (individual_ranks.size() != blocks.size())
    throw input_error("fit_jive: one individual rank per block required");
  const Index n_rows = blocks[0].rows();
  double total_ss = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    require_finite(blocks[k], "fit_jive");
    if (blocks[k].rows() != n_rows)
      throw dimension_error("fit_jive: blocks do not share rows");
    if (joint_rank < 0 || individual_ranks[k] < 0)
      throw input_error("fit_jive: negative rank");
    if (joint_rank + individual_ranks[k] >
        std::min(n_rows, blocks[k].cols()))
      throw dimension_error(
          "fit_jive: joint plus individual rank exceeds the size of block " +
          std::to_string(k + 1));
    total_ss += blocks[k].squaredNorm();
  }

  JiveModel model;
  model.joint_rank = joint_rank;
  model.individual_ranks = individual_ranks;
  const std::size_t nk = blocks.size();
  std::vector<Matrix> individual(nk);
  for (std::size_t k = 0; k < nk; ++k)
    individual[k] = Matrix::Zero(n_rows, blocks[k].cols());

  Matrix joint_scores(n_rows, joint_rank);
  std::vector<Matrix> joint_loadings(nk);
  for (std::size_t k = 0; k < nk; ++k)
    joint_loadings[k] = Matrix::Zero(blocks[k].cols(), joint_rank);

  if (joint_rank > 0) {
    // Deterministic start: shared scores from the plain concatenated fit.
    joint_scores = fit_sca(blocks, joint_rank, options.rank_tol).scores;
  }

  std::vector<Matrix> prev_individual = individual;
  Matrix prev_joint_scores = joint_scores;
  std::vector<Matrix> prev_joint_loadings = joint_loadings;

  double prev_f = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Joint step: best shared rank-r fit of the individually-deflated
    // concatenation.
    if (joint_rank > 0) {
      std::vector<Matrix> deflated(nk);
      for (std::size_t k = 0; k < nk; ++k) deflated[k] = blocks[k] - individual[k];
      const Matrix concat = concatenate_columns(deflated);
      const SvdResult svd = thin_svd(concat, options.rank_tol);
      const Index keep = std::min(joint_rank, svd.rank());
      joint_scores.setZero();
      joint_scores.leftCols(keep) = svd.left.leftCols(keep);
      for (std::size_t k = 0; k < nk; ++k)
        joint_loadings[k] = deflated[k].transpose() * joint_scores;
    }

    // Individual step: per block, truncated fit of the joint-orthogonal
    // remainder; projecting out the joint scores keeps the
    // common-vs-distinct constraints exact at every iteration.
    for (std::size_t k = 0; k < nk; ++k) {
      Matrix remainder = blocks[k];
      if (joint_rank > 0)
        remainder -= joint_scores * (joint_scores.transpose() * blocks[k]);
      const detail::Rank1Truncation t = detail::truncated_pca(
          remainder, individual_ranks[k], options.rank_tol);
      individual[k] = t.scores * t.loadings.transpose();
    }

    double f = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
      const Matrix joint_part =
          joint_rank > 0 ? Matrix(joint_scores * joint_loadings[k].transpose())
                         : Matrix::Zero(n_rows, blocks[k].cols());
      f += (blocks[k] - joint_part - individual[k]).squaredNorm();
    }

    if (f > prev_f + 1e-12 * std::max(1.0, total_ss)) {
      // Safeguard: never accept a worsening sweep; report the previous
      // iterate as converged instead.
      individual = prev_individual;
      joint_scores = prev_joint_scores;
      joint_loadings = prev_joint_loadings;
      model.converged = true;
      break;
    }
    model.fit_history.push_back(f);
    model.iterations = iter + 1;
    prev_individual = individual;
    prev_joint_scores = joint_scores;
    prev_joint_loadings = joint_loadings;

    if (prev_f - f <= options.convergence_tol * std::max(total_ss, 1e-300)) {
      model.converged = true;
      prev_f = f;
      break;
    }
    prev_f = f;
  }
  if (!model.converged)
    throw convergence_error("fit_jive: no convergence within " +
                                std::to_string(options.max_iterations) +
                                " iterations",
                            model.fit_history);

  model.joint_scores = joint_scores;
  for (std::size_t k = 0; k < nk; ++k) {
    model.joint_loadings.push_back(joint_loadings[k]);
    const detail::Rank1Truncation t = detail::truncated_pca(
        individual[k], individual_ranks[k], options.rank_tol);
    model.individual_scores.push_back(t.scores);
    model.individual_loadings.push_back(t.loadings);
    const Matrix joint_part =
        joint_rank > 0 ? Matrix(joint_scores * joint_loadings[k].transpose())
                       : Matrix::Zero(n_rows, blocks[k].cols());
    model.residuals.push_back(blocks[k] - joint_part - individual[k]);
    model.explained.push_back(variance_decomposition(
        blocks[k], {joint_part, individual[k]}, {"joint", "individual"}));
  }
  return model;
}

inline JiveModel fit_jive(const std::vector<DataBlock>& blocks,
                          Index joint_rank,
                          const std::vector<Index>& individual_ranks,
                          const JiveOptions& options = {}) {
  require_shared_rows(blocks);
  return fit_jive(block_values(blocks), joint_rank, individual_ranks, options);
}

// ---------------------------------------------------------------------------
// Permutation-based rank selection.

struct RankSelectionReport {
  Index joint_rank = 0;
  std::vector<Index> individual_ranks;
  // Per candidate rank r (1-based): observed statistic and the null
  // quantile it was compared against.
  std::vector<double> joint_observed, joint_null_quantile;
  std::vector<std::vector<double>> individual_observed, individual_null_quantile;
};

namespace detail {

// p-value with the add-one convention; exact under exchangeability.
inline double permutation_p_value(double observed,
                                  const std::vector<double>& null_values) {
  std::size_t at_least = 0;
  for (double v : null_values)
    if (v >= observed) ++at_least;
  return static_cast<double>(1 + at_least) /
         static_cast<double>(1 + null_values.size());
}

inline double upper_quantile(std::vector<double> values, double alpha) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t idx = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(n)));
  if (idx > 0) --idx;
  if (idx >= n) idx = n - 1;
  return values[idx];
}

}  // namespace detail

/// Chooses the joint rank by a permutation test on the singular values of
/// the concatenation: permuting rows independently within each block
/// breaks the cross-block association while leaving every within-block
/// spectrum intact, so surviving concatenation structure indicates joint
/// variation. Individual ranks are then tested per block on the
/// joint-deflated remainder against column-wise entry permutations.
///
/// Candidate ranks are scanned smallest first at a Bonferroni-corrected
/// level (alpha over the candidate count), stopping at the first failure;
/// the familywise false-positive rate stays at alpha. alpha >= 1 is the
/// documented degenerate edge that accepts every candidate.
inline RankSelectionReport select_ranks_permutation(
    const std::vector<Matrix>& blocks, Index max_joint_rank,
    const std::vector<Index>& max_individual_ranks, int n_permutations,
    double alpha, std::uint64_t seed, double rank_tol = kDefaultRankTol) {
  if (blocks.empty()) throw input_error("select_ranks_permutation: no blocks");
  if (n_permutations < 1)
    throw input_error("select_ranks_permutation: need at least 1 permutation");
  if (max_individual_ranks.size() != blocks.size())
    throw input_error("select_ranks_permutation: one max rank per block");
  const Index n_rows = blocks[0].rows();

  RankSelectionReport report;

  // --- joint rank ---
  const Matrix concat = concatenate_columns(blocks);
  const SvdResult obs = thin_svd(concat, rank_tol);
  const Index candidates = std::min<Index>(max_joint_rank, obs.rank());

  std::vector<std::vector<double>> null_sv(
      static_cast<std::size_t>(candidates));
  {
    std::vector<std::vector<double>> per_perm(
        static_cast<std::size_t>(n_permutations));
    parallel_for(static_cast<std::size_t>(n_permutations), [&](std::size_t p) {
      std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (p + 1));
      std::vector<Matrix> permuted;
      permuted.reserve(blocks.size());
      for (const auto& x : blocks) {
        std::vector<Index> perm(static_cast<std::size_t>(n_rows));
        for (Index i = 0; i < n_rows; ++i)
          perm[static_cast<std::size_t>(i)] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix shuffled(n_rows, x.cols());
        for (Index i = 0; i < n_rows; ++i)
          shuffled.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
        permuted.push_back(std::move(shuffled));
      }
      const SvdResult nsvd = thin_svd(concatenate_columns(permuted), rank_tol);
      std::vector<double> sv(static_cast<std::size_t>(candidates), 0.0);
      for (Index r = 0; r < std::min(candidates, nsvd.rank()); ++r)
        sv[static_cast<std::size_t>(r)] = nsvd.singular_values(r);
      per_perm[p] = std::move(sv);
    });
    for (Index r = 0; r < candidates; ++r) {
      std::vector<double> column;
      column.reserve(per_perm.size());
      for (const auto& sv : per_perm)
        column.push_back(sv[static_cast<std::size_t>(r)]);
      null_sv[static_cast<std::size_t>(r)] = std::move(column);
    }
  }

  const double level =
      alpha >= 1.0 ? 1.0
                   : alpha / static_cast<double>(std::max<Index>(1, candidates));
  Index joint = 0;
  for (Index r = 0; r < candidates; ++r) {
    const double observed = obs.singular_values(r);
    const auto& nulls = null_sv[static_cast<std::size_t>(r)];
    report.joint_observed.push_back(observed);
    report.joint_null_quantile.push_back(detail::upper_quantile(nulls, alpha));
    const double p = detail::permutation_p_value(observed, nulls);
    if (alpha >= 1.0 || p <= level)
      joint = r + 1;
    else
      break;
  }
  report.joint_rank = joint;

  // --- individual ranks on the joint-deflated remainders ---
  Matrix joint_basis(n_rows, joint);
  if (joint > 0) joint_basis = obs.left.leftCols(joint);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    Matrix remainder = blocks[k];
    if (joint > 0)
      remainder -= joint_basis * (joint_basis.transpose() * blocks[k]);
    const SvdResult robs = thin_svd(remainder, rank_tol);
    const Index cand = std::min<Index>(max_individual_ranks[k], robs.rank());
    std::vector<double> observed_list, quantile_list;
    const double klevel =
        alpha >= 1.0 ? 1.0
                     : alpha / static_cast<double>(std::max<Index>(1, cand));

    std::vector<std::vector<double>> null_cols(static_cast<std::size_t>(cand));
    std::vector<std::vector<double>> per_perm(
        static_cast<std::size_t>(n_permutations));
    parallel_for(static_cast<std::size_t>(n_permutations), [&](std::size_t p) {
      std::mt19937_64 rng(seed + 0xda942042e4dd58b5ull * (p + 1) +
                          0x100000001b3ull * (k + 1));
      Matrix shuffled = remainder;
      for (Index j = 0; j < shuffled.cols(); ++j) {
        for (Index i = n_rows - 1; i > 0; --i) {
          std::uniform_int_distribution<Index> pick(0, i);
          std::swap(shuffled(i, j), shuffled(pick(rng), j));
        }
      }
      const SvdResult nsvd = thin_svd(shuffled, rank_tol);
      std::vector<double> sv(static_cast<std::size_t>(cand), 0.0);
      for (Index r = 0; r < std::min(cand, nsvd.rank()); ++r)
        sv[static_cast<std::size_t>(r)] = nsvd.singular_values(r);
      per_perm[p] = std::move(sv);
    });
    for (Index r = 0; r < cand; ++r) {
      std::vector<double> column;
      for (const auto& sv : per_perm)
        column.push_back(sv[static_cast<std::size_t>(r)]);
      null_cols[static_cast<std::size_t>(r)] = std::move(column);
    }

    Index rank_k = 0;
    for (Index r = 0; r < cand; ++r) {
      const double observed = robs.singular_values(r);
      const auto& nulls = null_cols[static_cast<std::size_t>(r)];
      observed_list.push_back(observed);
      quantile_list.push_back(detail::upper_quantile(nulls, alpha));
      const double p = detail::permutation_p_value(observed, nulls);
      if (alpha >= 1.0 || p <= klevel)
        rank_k = r + 1;
      else
        break;
    }
    report.individual_ranks.push_back(rank_k);
    report.individual_observed.push_back(std::move(observed_list));
    report.individual_null_quantile.push_back(std::move(quantile_list));
  }
  return report;
}

}  // namespace cdfuse
