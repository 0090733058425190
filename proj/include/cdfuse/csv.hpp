#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cdfuse/block.hpp"
#include "cdfuse/errors.hpp"

namespace cdfuse {

// All numeric output uses 12 significant digits; together with the fixed
// CSV dialect (comma, '.' decimal, LF) this keeps reports byte-stable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

/// Reads a labeled data block: first row is the header (corner cell plus
/// variable names), first column holds the sample identifiers. Strict
/// numeric parsing; errors carry row/column coordinates.
inline DataBlock ingest_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && rows.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  while (!rows.empty() && rows.back().size() <= 1 &&
         (rows.back().empty() || rows.back()[0].empty()))
    rows.pop_back();
  if (rows.size() < 2)
    throw input_error("'" + path + "': need a header row and at least one data row");

  const std::size_t width = rows[0].size();
  if (width < 2)
    throw input_error("'" + path + "': need at least one variable column");

  DataBlock block;
  for (std::size_t j = 1; j < width; ++j) block.col_labels.push_back(rows[0][j]);
  block.values.resize(static_cast<Index>(rows.size() - 1),
                      static_cast<Index>(width - 1));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != width)
      throw input_error("'" + path + "': row " + std::to_string(i + 1) +
                        " has " + std::to_string(rows[i].size()) +
                        " cells, expected " + std::to_string(width));
    block.row_labels.push_back(rows[i][0]);
    for (std::size_t j = 1; j < width; ++j) {
      const std::string& cell = rows[i][j];
      double value = 0.0;
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw input_error("'" + path + "': non-numeric cell '" + cell +
                          "' at row " + std::to_string(i + 1) + ", column " +
                          std::to_string(j + 1));
      block.values(static_cast<Index>(i - 1), static_cast<Index>(j - 1)) =
          value;
    }
  }
  block.validate();
  return block;
}

inline void write_labeled_csv(const std::string& path, const Matrix& values,
                              const std::vector<std::string>& row_labels,
                              const std::vector<std::string>& col_labels,
                              const std::string& corner = "id") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << corner;
  for (const auto& c : col_labels) out << "," << c;
  out << "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    out << row_labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < values.cols(); ++j)
      out << "," << format_double(values(i, j));
    out << "\n";
  }
}

inline void write_block_csv(const std::string& path, const DataBlock& block) {
  write_labeled_csv(path, block.values, block.row_labels, block.col_labels);
}

}  // namespace cdfuse
