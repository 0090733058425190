#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "cdfuse/errors.hpp"
#include "cdfuse/linalg.hpp"

namespace cdfuse {

/// A labeled data block. Blocks entering one analysis share the row mode
/// (samples), in identical order. `provenance` records every preprocessing
/// step applied since ingestion, in application order.
struct DataBlock {
  Matrix values;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::string> provenance;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  void validate() const {
    if (static_cast<Index>(row_labels.size()) != values.rows())
      throw input_error("block: row label count does not match row count");
    if (static_cast<Index>(col_labels.size()) != values.cols())
      throw input_error("block: column label count does not match column count");
    std::unordered_set<std::string> seen;
    for (const auto& r : row_labels)
      if (!seen.insert(r).second)
        throw input_error("block: duplicate row label '" + r + "'");
  }
};

inline DataBlock make_block(Matrix values, const std::string& name = "block") {
  DataBlock b;
  b.row_labels.reserve(static_cast<std::size_t>(values.rows()));
  b.col_labels.reserve(static_cast<std::size_t>(values.cols()));
  for (Index i = 0; i < values.rows(); ++i)
    b.row_labels.push_back("r" + std::to_string(i + 1));
  for (Index j = 0; j < values.cols(); ++j)
    b.col_labels.push_back(name + "_v" + std::to_string(j + 1));
  b.values = std::move(values);
  return b;
}

// Sibling blocks must agree on row labels, same order. Reports the first
// mismatch by position.
inline void require_shared_rows(const std::vector<DataBlock>& blocks) {
  if (blocks.empty()) throw input_error("no data blocks given");
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    if (blocks[k].rows() != blocks[0].rows())
      throw input_error("blocks 1 and " + std::to_string(k + 1) +
                        " have different row counts");
    for (std::size_t i = 0; i < blocks[0].row_labels.size(); ++i) {
      if (blocks[k].row_labels[i] != blocks[0].row_labels[i])
        throw input_error("row label mismatch between blocks 1 and " +
                          std::to_string(k + 1) + " at row " +
                          std::to_string(i + 1) + ": '" +
                          blocks[0].row_labels[i] + "' vs '" +
                          blocks[k].row_labels[i] + "'");
    }
  }
}

inline std::vector<Matrix> block_values(const std::vector<DataBlock>& blocks) {
  std::vector<Matrix> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.values);
  return out;
}

inline Matrix concatenate_columns(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) throw input_error("concatenate_columns: no blocks");
  Index cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != blocks[0].rows())
      throw dimension_error("concatenate_columns: row counts differ");
    cols += b.cols();
  }
  Matrix out(blocks[0].rows(), cols);
  Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

}  // namespace cdfuse
