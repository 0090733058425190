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

/// Allocation of components to blocks: per component, the subset of
/// blocks (bitmask, bit k-1 = block k) in which the component is allowed
/// to load. Full subset = common component, singleton = distinct,
/// proper subset = partially common. The loading rows of every block
/// outside a component's subset are the rotation's zero targets.
struct TargetStructure {
  Index n_components = 0;
  int n_blocks = 0;
  std::vector<std::uint32_t> assignment;  // length n_components, nonempty masks

  void validate() const {
    if (n_components < 1 || n_blocks < 2)
      throw input_error("target: need >= 1 component and >= 2 blocks");
    if (static_cast<Index>(assignment.size()) != n_components)
      throw input_error("target: assignment length mismatch");
    const std::uint32_t full = (1u << n_blocks) - 1u;
    for (auto m : assignment)
      if (m == 0 || (m & ~full) != 0)
        throw input_error("target: component assigned to no valid block");
  }

  bool contains(Index component, int block) const {
    return (assignment[static_cast<std::size_t>(component)] >>
            (block - 1)) & 1u;
  }

  bool is_common(Index component) const {
    return assignment[static_cast<std::size_t>(component)] ==
           (1u << n_blocks) - 1u;
  }

  bool is_distinct(Index component) const {
    const std::uint32_t m = assignment[static_cast<std::size_t>(component)];
    return (m & (m - 1)) == 0;  // exactly one bit
  }

  // "C-123" for a component shared by blocks 1..3, "D-2" for a component
  // distinct to block 2, "C-12" for a partially common one.
  std::string label(Index component) const {
    const std::uint32_t m = assignment[static_cast<std::size_t>(component)];
    std::string blocks;
    for (int k = 1; k <= n_blocks; ++k)
      if ((m >> (k - 1)) & 1u) blocks += std::to_string(k);
    return (is_distinct(component) ? "D-" : "C-") + blocks;
  }

  std::string encode() const {
    std::string out;
    for (Index r = 0; r < n_components; ++r) {
      if (r > 0) out += "|";
      out += label(r);
    }
    return out;
  }

  Index masked_cell_count(const std::vector<Index>& block_cols) const {
    Index cells = 0;
    for (Index r = 0; r < n_components; ++r)
      for (int k = 1; k <= n_blocks; ++k)
        if (!contains(r, k)) cells += block_cols[static_cast<std::size_t>(k - 1)];
    return cells;
  }

  // Relaxation preorder: t1 <= t2 if t2's constraints can be obtained from
  // t1's by dropping some (i.e. t2's assignments are supersets under some
  // component permutation). Used to reason about provable objective ties.
  bool relaxes(const TargetStructure& other) const;
};

inline std::string parse_target_component(const std::string& token,
                                          int n_blocks,
                                          std::uint32_t* mask_out) {
  const auto dash = token.find('-');
  if (dash == std::string::npos || (token[0] != 'C' && token[0] != 'D'))
    return "component label '" + token + "' is not of the form C-12 / D-1";
  std::uint32_t mask = 0;
  for (std::size_t i = dash + 1; i < token.size(); ++i) {
    const char ch = token[i];
    if (ch < '1' || ch > '0' + n_blocks)
      return "component label '" + token + "' names an unknown block";
    mask |= 1u << (ch - '1');
  }
  if (mask == 0) return "component label '" + token + "' names no block";
  *mask_out = mask;
  return {};
}

inline TargetStructure parse_target(const std::string& text, int n_blocks) {
  TargetStructure t;
  t.n_blocks = n_blocks;
  std::size_t at = 0;
  while (at <= text.size()) {
    const auto bar = text.find('|', at);
    const std::string token =
        text.substr(at, bar == std::string::npos ? std::string::npos
                                                 : bar - at);
    std::uint32_t mask = 0;
    const std::string err = parse_target_component(token, n_blocks, &mask);
    if (!err.empty()) throw config_error("target: " + err);
    t.assignment.push_back(mask);
    if (bar == std::string::npos) break;
    at = bar + 1;
  }
  t.n_components = static_cast<Index>(t.assignment.size());
  t.validate();
  return t;
}

inline bool TargetStructure::relaxes(const TargetStructure& other) const {
  if (n_components != other.n_components || n_blocks != other.n_blocks)
    return false;
  // Backtracking bipartite matching; component counts are small here.
  std::vector<bool> used(assignment.size(), false);
  std::function<bool(std::size_t)> match = [&](std::size_t i) -> bool {
    if (i == assignment.size()) return true;
    for (std::size_t j = 0; j < other.assignment.size(); ++j) {
      if (used[j]) continue;
      if ((assignment[i] & other.assignment[j]) == assignment[i]) {
        used[j] = true;
        if (match(i + 1)) return true;
        used[j] = false;
      }
    }
    return false;
  };
  return match(0);
}

/// All multisets of size R over the 2^K - 1 nonempty block subsets,
/// enumerated in a fixed canonical order. The count is
/// C(R + 2^K - 2, 2^K - 2); requests beyond max_count throw instead of
/// exhausting memory so callers can prune explicitly.
inline std::vector<TargetStructure> enumerate_targets(
    Index r, int k, std::size_t max_count = 1000000) {
  if (r < 1 || k < 2) throw input_error("enumerate_targets: need R >= 1, K >= 2");
  if (k > 16) throw input_error("enumerate_targets: too many blocks");
  const std::uint64_t subsets = (1u << k) - 1u;

  // count = C(r + subsets - 1, subsets - 1), checked for overflow
  long double count = 1.0L;
  for (std::uint64_t i = 1; i < subsets; ++i)
    count *= static_cast<long double>(r + i) / static_cast<long double>(i);
  if (count > static_cast<long double>(max_count))
    throw config_error(
        "enumerate_targets: " + std::to_string(static_cast<double>(count)) +
        " target matrices exceed the limit of " + std::to_string(max_count) +
        "; prune the candidate set explicitly");

  std::vector<TargetStructure> out;
  std::vector<std::uint32_t> current;
  // Non-decreasing mask sequences enumerate each multiset exactly once.
  std::function<void(std::uint32_t)> recurse = [&](std::uint32_t from) {
    if (static_cast<Index>(current.size()) == r) {
      TargetStructure t;
      t.n_components = r;
      t.n_blocks = k;
      t.assignment = current;
      out.push_back(std::move(t));
      return;
    }
    for (std::uint32_t m = from; m <= subsets; ++m) {
      current.push_back(m);
      recurse(m);
      current.pop_back();
    }
  };
  recurse(1);
  return out;
}

// ---------------------------------------------------------------------------

struct DiscoOptions {
  int restarts = 10;          // random restarts of the rotation search
  int max_iterations = 10000;
  double convergence_tol = 1e-12;  // absolute objective decrease
  std::uint64_t seed = 20230901;   // restart RNG
  double tie_tol = 1e-3;  // models within this of the best are reported tied
  // Alternative mask convention: rotate toward a fixed target holding the
  // unrotated loadings at the free cells, minimizing over all entries.
  bool mask_all_entries = false;
  unsigned threads = 0;  // 0 = default
};

struct DiscoModel {
  TargetStructure target;
  Matrix rotation;               // Q, R x R, orthogonal
  Matrix scores;                 // T = T~ Q, columns stay orthogonal
  std::vector<Matrix> loadings;  // rotated per-block loadings
  // Masked sum of squares per zero-target cell; the model-selection
  // yardstick. A target with no zero cells constrains nothing and gets
  // +infinity (reported as unconstrained).
  double non_congruence = 0.0;
  double masked_ss = 0.0;  // raw rotation objective
  Index masked_cells = 0;
  bool tied_with_best = false;
  std::vector<VarianceTable> explained;  // per block

  bool constrained() const { return masked_cells > 0; }
};

namespace detail {

inline Matrix random_orthogonal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = gauss(rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix the sign ambiguity of the QR factor.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

// min_Q ||A Q - B||^2 over orthogonal Q.
inline Matrix procrustes_factor(const Matrix& a, const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(a.transpose() * b,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Orthogonal rotation of the SCA loadings toward the zero pattern of a
/// target. The objective is the summed squared rotated loadings over the
/// zero-target cells, minimized by iterative majorization: each sweep
/// rebuilds the free cells from the current rotation and solves one
/// orthogonal Procrustes problem, which never increases the objective.
inline DiscoModel rotate_to_target(const ScaModel& sca,
                                   const TargetStructure& target,
                                   const DiscoOptions& options = {}) {
  target.validate();
  if (target.n_components != sca.n_components())
    throw input_error("rotate_to_target: target and model component counts differ");
  if (target.n_blocks != static_cast<int>(sca.n_blocks()))
    throw input_error("rotate_to_target: target and model block counts differ");

  const Matrix stacked = sca.stacked_loadings();
  const Index total_rows = stacked.rows();
  const Index r = sca.n_components();

  // Row-wise mask: 1 where the target demands a zero loading.
  Matrix mask = Matrix::Zero(total_rows, r);
  {
    Index at = 0;
    for (std::size_t k = 0; k < sca.loadings.size(); ++k) {
      const Index jk = sca.block_cols[k];
      for (Index c = 0; c < r; ++c)
        if (!target.contains(c, static_cast<int>(k) + 1))
          mask.block(at, c, jk, 1).setOnes();
      at += jk;
    }
  }

  const auto masked_objective = [&](const Matrix& q) {
    return (mask.array() * (stacked * q).array()).square().sum();
  };

  DiscoModel model;
  model.target = target;
  model.masked_cells = static_cast<Index>(mask.sum() + 0.5);

  Matrix best_q = Matrix::Identity(r, r);
  double best_f = std::numeric_limits<double>::infinity();

  if (model.masked_cells == 0 || options.mask_all_entries) {
    if (options.mask_all_entries) {
      // One-shot variant: fixed target keeping the unrotated loadings at
      // free cells, zeros at masked cells; minimized over all entries.
      const Matrix fixed_target =
          ((1.0 - mask.array()) * stacked.array()).matrix();
      best_q = detail::procrustes_factor(stacked, fixed_target);
    }
    best_f = masked_objective(best_q);
  } else {
    std::mt19937_64 rng(options.seed);
    for (int restart = 0; restart < options.restarts; ++restart) {
      Matrix q = restart == 0 ? Matrix::Identity(r, r)
                              : detail::random_orthogonal(r, rng);
      double f = masked_objective(q);
      for (int iter = 0; iter < options.max_iterations; ++iter) {
        const Matrix rotated = stacked * q;
        const Matrix free_cells =
            ((1.0 - mask.array()) * rotated.array()).matrix();
        q = detail::procrustes_factor(stacked, free_cells);
        const double f_new = masked_objective(q);
        if (f - f_new < options.convergence_tol) {
          f = std::min(f, f_new);
          break;
        }
        f = f_new;
      }
      if (f < best_f) {
        best_f = f;
        best_q = q;
      }
    }
  }

  model.rotation = best_q;
  model.scores = sca.scores * best_q;
  model.masked_ss = best_f;
  model.non_congruence =
      model.masked_cells > 0
          ? best_f / static_cast<double>(model.masked_cells)
          : std::numeric_limits<double>::infinity();
  {
    Index at = 0;
    for (std::size_t k = 0; k < sca.loadings.size(); ++k) {
      const Index jk = sca.block_cols[k];
      model.loadings.push_back(stacked.middleRows(at, jk) * best_q);
      at += jk;
    }
  }
  return model;
}

// Variance tables for a rotated model: per block, one entry per component
// grouped by its role for that block. Components outside the block's
// assignment contribute the distinct-non-orthogonal leakage.
inline void attach_disco_variance(DiscoModel& model,
                                  const std::vector<Matrix>& blocks) {
  model.explained.clear();
  const Index r = model.target.n_components;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    std::vector<Matrix> parts;
    std::vector<std::string> names;
    for (Index c = 0; c < r; ++c) {
      const Matrix part =
          model.scores.col(c) * model.loadings[k].col(c).transpose();
      const bool inside = model.target.contains(c, static_cast<int>(k) + 1);
      const std::string role = inside ? model.target.label(c)
                                      : "dno:" + model.target.label(c);
      parts.push_back(part);
      names.push_back(role + "#" + std::to_string(c + 1));
    }
    model.explained.push_back(variance_decomposition(blocks[k], parts, names));
  }
}

/// Full DISCO run: one SCA fit, then one rotation per candidate target,
/// ranked by non-congruence. Ties within tie_tol of the best are flagged
/// rather than silently resolved; among exact ties more-constrained
/// targets rank first so that relaxations of a perfect structure cannot
/// displace it.
inline std::vector<DiscoModel> fit_disco(
    const std::vector<Matrix>& blocks, Index n_components,
    const std::vector<TargetStructure>* targets = nullptr,
    const DiscoOptions& options = {}, double rank_tol = kDefaultRankTol) {
  const ScaModel sca = fit_sca(blocks, n_components, rank_tol);
  const std::vector<TargetStructure> all =
      targets != nullptr
          ? *targets
          : enumerate_targets(n_components, static_cast<int>(blocks.size()));
  if (all.empty()) throw input_error("fit_disco: empty target list");

  std::vector<DiscoModel> models(all.size());
  parallel_for(
      all.size(),
      [&](std::size_t i) {
        models[i] = rotate_to_target(sca, all[i], options);
        attach_disco_variance(models[i], blocks);
      },
      options.threads);

  std::stable_sort(models.begin(), models.end(),
                   [](const DiscoModel& a, const DiscoModel& b) {
                     if (a.non_congruence != b.non_congruence)
                       return a.non_congruence < b.non_congruence;
                     if (a.masked_cells != b.masked_cells)
                       return a.masked_cells > b.masked_cells;
                     return a.target.encode() < b.target.encode();
                   });
  // Within the tie band of the best value, constraint count decides:
  // relaxations of a perfectly fitting target reach the same (near-zero)
  // objective by construction, so the fully constrained structure must
  // come first.
  const double best = models.front().non_congruence;
  std::size_t band_end = 0;
  while (band_end < models.size() && models[band_end].constrained() &&
         models[band_end].non_congruence - best <= options.tie_tol)
    ++band_end;
  std::stable_sort(models.begin(), models.begin() + band_end,
                   [](const DiscoModel& a, const DiscoModel& b) {
                     if (a.masked_cells != b.masked_cells)
                       return a.masked_cells > b.masked_cells;
                     if (a.non_congruence != b.non_congruence)
                       return a.non_congruence < b.non_congruence;
                     return a.target.encode() < b.target.encode();
                   });
  for (std::size_t i = 0; i < band_end; ++i) models[i].tied_with_best = true;
  return models;
}

inline std::vector<DiscoModel> fit_disco(
    const std::vector<DataBlock>& blocks, Index n_components,
    const std::vector<TargetStructure>* targets = nullptr,
    const DiscoOptions& options = {}, double rank_tol = kDefaultRankTol) {
  require_shared_rows(blocks);
  return fit_disco(block_values(blocks), n_components, targets, options,
                   rank_tol);
}

}  // namespace cdfuse
