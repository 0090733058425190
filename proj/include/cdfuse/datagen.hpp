#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cdfuse/block.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"

namespace cdfuse {

/// Recipe for blocks with exactly known common/distinct structure. Common
/// subspaces are keyed by the subset of blocks sharing them (bitmask, bit
/// k-1 = block k participates; at least two bits set). Scores are drawn
/// from a standard normal and, by default, orthonormalized so that all
/// planted subspaces are exactly mutually orthogonal; without that option
/// they are merely linearly independent (generic position).
struct SyntheticSpec {
  Index n_rows = 0;
  std::vector<Index> block_cols;
  std::map<std::uint32_t, Index> common_dims;  // subset mask -> dimension
  std::vector<Index> distinct_dims;            // per block
  std::uint64_t seed = 0;
  std::vector<double> noise_snr_db;     // empty = noiseless; else per block
  std::vector<double> block_scales;     // empty = all ones
  bool orthonormal_scores = true;
  // Fig-4b style regime: each block sees its own copy of every common
  // score, tilted away from the shared one by this angle (degrees).
  double common_score_cone_deg = 0.0;

  int n_blocks() const { return static_cast<int>(block_cols.size()); }
};

struct SyntheticData {
  std::vector<DataBlock> blocks;       // signal + noise, scaled
  std::vector<Matrix> clean_blocks;    // signal only, unscaled
  std::map<std::uint32_t, SubspaceBasis> common_bases;
  std::vector<SubspaceBasis> distinct_bases;
  std::vector<SubspaceBasis> signal_bases;  // span of each clean block
  // Per block, per common subset: the block's own (possibly tilted) copy
  // of the common scores.
  std::vector<std::map<std::uint32_t, Matrix>> per_block_common_scores;
  bool trivial_full_intersection = false;  // any J_k > I regime

  Index block_structural_rank(const SyntheticSpec& spec, int block) const {
    Index r = spec.distinct_dims[static_cast<std::size_t>(block - 1)];
    for (const auto& [mask, dim] : spec.common_dims)
      if ((mask >> (block - 1)) & 1u) r += dim;
    return r;
  }
};

inline void validate_synthetic_spec(const SyntheticSpec& spec) {
  const int k = spec.n_blocks();
  if (spec.n_rows < 2 || k < 1)
    throw input_error("datagen: need at least 2 rows and 1 block");
  if (spec.distinct_dims.size() != spec.block_cols.size())
    throw input_error("datagen: one distinct dimension per block required");
  const std::uint32_t full = (1u << k) - 1u;
  Index total = 0;
  for (const auto& [mask, dim] : spec.common_dims) {
    if (mask == 0 || (mask & ~full) != 0)
      throw input_error("datagen: common subset mask names unknown blocks");
    if ((mask & (mask - 1)) == 0)
      throw input_error("datagen: common subsets need at least two blocks");
    if (dim < 0) throw input_error("datagen: negative common dimension");
    total += dim;
  }
  for (int b = 1; b <= k; ++b) {
    Index rank = spec.distinct_dims[static_cast<std::size_t>(b - 1)];
    if (rank < 0) throw input_error("datagen: negative distinct dimension");
    for (const auto& [mask, dim] : spec.common_dims)
      if ((mask >> (b - 1)) & 1u) rank += dim;
    const Index limit =
        std::min(spec.n_rows, spec.block_cols[static_cast<std::size_t>(b - 1)]);
    if (rank > limit)
      throw input_error("datagen: block " + std::to_string(b) +
                        " needs rank " + std::to_string(rank) +
                        " but can hold at most " + std::to_string(limit));
    if (rank == 0)
      throw input_error("datagen: block " + std::to_string(b) +
                        " carries no structure at all");
  }
  if (!spec.noise_snr_db.empty() &&
      spec.noise_snr_db.size() != spec.block_cols.size())
    throw input_error("datagen: one SNR per block (or none) required");
  if (!spec.block_scales.empty() &&
      spec.block_scales.size() != spec.block_cols.size())
    throw input_error("datagen: one scale per block (or none) required");
  (void)total;
}

inline SyntheticData generate(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto gaussian_matrix = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
    return m;
  };

  const int k = spec.n_blocks();
  Index total_dims = 0;
  for (const auto& [mask, dim] : spec.common_dims) total_dims += dim;
  for (Index d : spec.distinct_dims) total_dims += d;
  if (total_dims > spec.n_rows)
    throw input_error("datagen: total structural dimension exceeds rows");

  // One pool of score directions, assigned in a fixed order: common
  // subsets (ascending mask), then per-block distinct spaces.
  Matrix scores = gaussian_matrix(spec.n_rows, total_dims);
  if (spec.orthonormal_scores) {
    const SvdResult svd = thin_svd(scores);
    if (svd.rank() < total_dims)
      throw numerical_error("datagen: degenerate random scores");
    scores = svd.left;
  }

  SyntheticData data;
  data.per_block_common_scores.resize(static_cast<std::size_t>(k));

  std::map<std::uint32_t, Matrix> common_scores;
  Index at = 0;
  for (const auto& [mask, dim] : spec.common_dims) {
    common_scores[mask] = scores.middleCols(at, dim);
    data.common_bases[mask] =
        orthonormal_basis(scores.middleCols(at, dim));
    at += dim;
  }
  std::vector<Matrix> distinct_scores;
  for (int b = 1; b <= k; ++b) {
    const Index dim = spec.distinct_dims[static_cast<std::size_t>(b - 1)];
    distinct_scores.push_back(scores.middleCols(at, dim));
    data.distinct_bases.push_back(
        orthonormal_basis(dim > 0 ? Matrix(scores.middleCols(at, dim))
                                  : Matrix::Zero(spec.n_rows, 0)));
    at += dim;
  }

  const double cone = spec.common_score_cone_deg * M_PI / 180.0;

  for (int b = 1; b <= k; ++b) {
    const Index cols = spec.block_cols[static_cast<std::size_t>(b - 1)];
    Matrix clean = Matrix::Zero(spec.n_rows, cols);
    for (const auto& [mask, dim] : spec.common_dims) {
      if (!((mask >> (b - 1)) & 1u) || dim == 0) continue;
      Matrix block_scores = common_scores[mask];
      if (cone > 0.0) {
        // Tilt each shared score inside a cone: the per-block common
        // subspaces then differ slightly instead of intersecting exactly.
        for (Index c = 0; c < dim; ++c) {
          Vector t = block_scores.col(c);
          const double tn = t.norm();
          Vector u = gaussian_matrix(spec.n_rows, 1).col(0);
          u -= t * (t.dot(u) / (tn * tn));
          u *= tn / u.norm();
          block_scores.col(c) = std::cos(cone) * t + std::sin(cone) * u;
        }
      }
      data.per_block_common_scores[static_cast<std::size_t>(b - 1)][mask] =
          block_scores;
      clean += block_scores * gaussian_matrix(cols, dim).transpose();
    }
    const Index ddim = spec.distinct_dims[static_cast<std::size_t>(b - 1)];
    if (ddim > 0)
      clean +=
          distinct_scores[static_cast<std::size_t>(b - 1)] *
          gaussian_matrix(cols, ddim).transpose();

    Matrix noisy = clean;
    if (!spec.noise_snr_db.empty()) {
      const double snr = spec.noise_snr_db[static_cast<std::size_t>(b - 1)];
      Matrix noise = gaussian_matrix(spec.n_rows, cols);
      const double target_noise_ss =
          clean.squaredNorm() / std::pow(10.0, snr / 10.0);
      noise *= std::sqrt(target_noise_ss) / noise.norm();
      noisy += noise;
    }
    if (!spec.block_scales.empty())
      noisy *= spec.block_scales[static_cast<std::size_t>(b - 1)];

    data.clean_blocks.push_back(clean);
    data.signal_bases.push_back(orthonormal_basis(clean));
    data.blocks.push_back(
        make_block(std::move(noisy), "block" + std::to_string(b)));
    if (cols > spec.n_rows) data.trivial_full_intersection = true;
  }
  return data;
}

}  // namespace cdfuse
