#pragma once

#include <map>
#include <string>
#include <vector>

#include "cdfuse/errors.hpp"
#include "cdfuse/gca.hpp"
#include "cdfuse/linalg.hpp"

namespace cdfuse {

/// A flat view of a fitted model for cross-method comparison: score
/// columns named "<group>.<index>", e.g. "common.1", "distinct1.2".
/// Per-block common variants use "common1"/"common2"; for subspace
/// matching they count as the "common" family.
struct NamedComponents {
  std::vector<std::string> names;
  Matrix scores;  // I x n, one column per name
};

inline std::string component_group(const std::string& name) {
  const auto dot = name.rfind('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

inline std::string group_family(const std::string& group) {
  if (group.rfind("common", 0) == 0) return "common";
  return group;
}

struct SubspaceMatch {
  std::string family;
  std::string group_a, group_b;
  Vector cosines;  // principal angle cosines, nonincreasing
};

struct ComparisonResult {
  std::vector<std::string> row_names, col_names;
  Matrix correlations;  // |rows| x |cols| Pearson correlations
  std::vector<SubspaceMatch> matched;
};

inline ComparisonResult compare_components(const NamedComponents& a,
                                           const NamedComponents& b,
                                           double rank_tol = kDefaultRankTol) {
  if (a.scores.rows() != b.scores.rows())
    throw input_error("compare: models do not share rows");
  if (static_cast<Index>(a.names.size()) != a.scores.cols() ||
      static_cast<Index>(b.names.size()) != b.scores.cols())
    throw input_error("compare: name/column count mismatch");

  ComparisonResult out;
  out.row_names = a.names;
  out.col_names = b.names;
  out.correlations.resize(a.scores.cols(), b.scores.cols());
  for (Index i = 0; i < a.scores.cols(); ++i)
    for (Index j = 0; j < b.scores.cols(); ++j)
      out.correlations(i, j) =
          pearson_correlation(a.scores.col(i), b.scores.col(j));

  auto collect = [](const NamedComponents& m) {
    std::map<std::string, std::vector<Index>> groups;
    for (std::size_t i = 0; i < m.names.size(); ++i)
      groups[component_group(m.names[i])].push_back(static_cast<Index>(i));
    return groups;
  };
  const auto groups_a = collect(a);
  const auto groups_b = collect(b);
  for (const auto& [ga, cols_a] : groups_a) {
    for (const auto& [gb, cols_b] : groups_b) {
      if (group_family(ga) != group_family(gb)) continue;
      Matrix ma(a.scores.rows(), static_cast<Index>(cols_a.size()));
      for (std::size_t j = 0; j < cols_a.size(); ++j)
        ma.col(static_cast<Index>(j)) = a.scores.col(cols_a[j]);
      Matrix mb(b.scores.rows(), static_cast<Index>(cols_b.size()));
      for (std::size_t j = 0; j < cols_b.size(); ++j)
        mb.col(static_cast<Index>(j)) = b.scores.col(cols_b[j]);
      SubspaceMatch match;
      match.family = group_family(ga);
      match.group_a = ga;
      match.group_b = gb;
      match.cosines = principal_angle_cosines(orthonormal_basis(ma, rank_tol),
                                              orthonormal_basis(mb, rank_tol));
      out.matched.push_back(std::move(match));
    }
  }
  return out;
}

}  // namespace cdfuse
