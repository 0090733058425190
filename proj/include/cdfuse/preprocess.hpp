#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cdfuse/block.hpp"
#include "cdfuse/errors.hpp"

namespace cdfuse {

enum class BlockScaleMode { frobenius, sum_of_squares_one };

/// One preprocessing step. Steps are applied strictly in the listed order.
struct PreprocessStep {
  enum class Kind {
    center,
    autoscale,
    sqrt_transform,
    multilevel_center,
    block_scale,
  };

  Kind kind = Kind::center;
  // multilevel_center: rows are grouped by the label prefix before this
  // delimiter (e.g. "s3_t1" with delimiter "_" groups by subject "s3").
  std::string group_delimiter = "_";
  BlockScaleMode scale_mode = BlockScaleMode::frobenius;

  std::string to_string() const {
    switch (kind) {
      case Kind::center: return "center";
      case Kind::autoscale: return "autoscale";
      case Kind::sqrt_transform: return "sqrt";
      case Kind::multilevel_center: return "multilevel_center:" + group_delimiter;
      case Kind::block_scale:
        return scale_mode == BlockScaleMode::frobenius
                   ? "block_scale:frobenius"
                   : "block_scale:sum_of_squares_one";
    }
    return "?";
  }
};

struct PreprocessSpec {
  std::vector<PreprocessStep> steps;
};

inline PreprocessStep parse_preprocess_step(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? std::string() : text.substr(colon + 1);
  PreprocessStep s;
  if (head == "center") {
    s.kind = PreprocessStep::Kind::center;
  } else if (head == "autoscale") {
    s.kind = PreprocessStep::Kind::autoscale;
  } else if (head == "sqrt") {
    s.kind = PreprocessStep::Kind::sqrt_transform;
  } else if (head == "multilevel_center") {
    s.kind = PreprocessStep::Kind::multilevel_center;
    if (!arg.empty()) s.group_delimiter = arg;
  } else if (head == "block_scale") {
    s.kind = PreprocessStep::Kind::block_scale;
    if (arg.empty() || arg == "frobenius") {
      s.scale_mode = BlockScaleMode::frobenius;
    } else if (arg == "sum_of_squares_one") {
      s.scale_mode = BlockScaleMode::sum_of_squares_one;
    } else {
      throw config_error("unknown block_scale mode '" + arg + "'");
    }
  } else {
    throw config_error("unknown preprocessing step '" + text + "'");
  }
  return s;
}

inline PreprocessSpec parse_preprocess_spec(const std::string& csv) {
  PreprocessSpec spec;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) spec.steps.push_back(parse_preprocess_step(item));
  }
  return spec;
}

// Named presets. "standard" is center + block scale; "multilevel" is the
// repeated-measures recipe (square root, per-subject centering, autoscale,
// block scale).
inline PreprocessSpec preprocess_preset(const std::string& name) {
  if (name == "standard")
    return parse_preprocess_spec("center,block_scale:frobenius");
  if (name == "multilevel")
    return parse_preprocess_spec(
        "sqrt,multilevel_center:_,autoscale,block_scale:frobenius");
  if (name == "none") return PreprocessSpec{};
  throw config_error("unknown preprocessing preset '" + name + "'");
}

inline DataBlock center_columns(const DataBlock& block) {
  if (block.rows() < 2)
    throw input_error("center_columns: need at least 2 rows");
  DataBlock out = block;
  out.values.rowwise() -= block.values.colwise().mean();
  out.provenance.push_back("center");
  return out;
}

inline DataBlock autoscale(const DataBlock& block) {
  if (block.rows() < 2) throw input_error("autoscale: need at least 2 rows");
  DataBlock out = block;
  const Index n = block.rows();
  for (Index j = 0; j < block.cols(); ++j) {
    const double mean = block.values.col(j).mean();
    const double ss = (block.values.col(j).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double scale = block.values.col(j).cwiseAbs().maxCoeff();
    if (sd <= 1e-12 * std::max(scale, 1e-300))
      throw input_error("autoscale: zero-variance column '" +
                        block.col_labels[static_cast<std::size_t>(j)] + "'");
    out.values.col(j) /= sd;
  }
  out.provenance.push_back("autoscale");
  return out;
}

inline DataBlock sqrt_transform(const DataBlock& block) {
  DataBlock out = block;
  for (Index i = 0; i < block.rows(); ++i)
    for (Index j = 0; j < block.cols(); ++j) {
      const double v = block.values(i, j);
      if (v < 0.0)
        throw input_error(
            "sqrt transform: negative entry at row '" +
            block.row_labels[static_cast<std::size_t>(i)] + "', column '" +
            block.col_labels[static_cast<std::size_t>(j)] + "'");
      out.values(i, j) = std::sqrt(v);
    }
  out.provenance.push_back("sqrt");
  return out;
}

inline std::string row_group_key(const std::string& label,
                                 const std::string& delimiter) {
  const auto pos = label.find(delimiter);
  if (pos == std::string::npos)
    throw input_error("multilevel_center: row label '" + label +
                      "' carries no grouping key (delimiter '" + delimiter +
                      "' not found)");
  return label.substr(0, pos);
}

/// Removes each group's average profile, e.g. per-subject centering of
/// repeated measurements. With a single group this equals center_columns.
inline DataBlock multilevel_center(const DataBlock& block,
                                   const std::string& delimiter = "_") {
  DataBlock out = block;
  std::map<std::string, std::vector<Index>> groups;
  for (Index i = 0; i < block.rows(); ++i)
    groups[row_group_key(block.row_labels[static_cast<std::size_t>(i)],
                         delimiter)]
        .push_back(i);
  for (const auto& [key, rows] : groups) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(block.cols());
    for (Index i : rows) mean += block.values.row(i);
    mean /= static_cast<double>(rows.size());
    for (Index i : rows) out.values.row(i) -= mean;
  }
  out.provenance.push_back("multilevel_center:" + delimiter);
  return out;
}

/// Scales each block to unit Frobenius norm (equivalently, unit total sum
/// of squares; both mode names are accepted).
inline std::vector<DataBlock> block_scale(
    const std::vector<DataBlock>& blocks,
    BlockScaleMode mode = BlockScaleMode::frobenius) {
  if (blocks.empty()) throw input_error("block_scale: no blocks");
  std::vector<DataBlock> out;
  out.reserve(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const double norm = blocks[k].values.norm();
    if (norm == 0.0)
      throw input_error("block_scale: block " + std::to_string(k + 1) +
                        " is all zero");
    DataBlock b = blocks[k];
    b.values /= norm;
    b.provenance.push_back(mode == BlockScaleMode::frobenius
                               ? "block_scale:frobenius"
                               : "block_scale:sum_of_squares_one");
    out.push_back(std::move(b));
  }
  return out;
}

/// Applies all steps of the spec, in order, across the block list.
inline std::vector<DataBlock> apply_preprocess(
    const PreprocessSpec& spec, const std::vector<DataBlock>& blocks) {
  std::vector<DataBlock> current = blocks;
  for (const auto& step : spec.steps) {
    switch (step.kind) {
      case PreprocessStep::Kind::center:
        for (auto& b : current) b = center_columns(b);
        break;
      case PreprocessStep::Kind::autoscale:
        for (auto& b : current) b = autoscale(b);
        break;
      case PreprocessStep::Kind::sqrt_transform:
        for (auto& b : current) b = sqrt_transform(b);
        break;
      case PreprocessStep::Kind::multilevel_center:
        for (auto& b : current) b = multilevel_center(b, step.group_delimiter);
        break;
      case PreprocessStep::Kind::block_scale:
        current = block_scale(current, step.scale_mode);
        break;
    }
  }
  return current;
}

/// Replays a recorded provenance on raw blocks. Deterministic steps make
/// this reproduce the processed data bit for bit.
inline std::vector<DataBlock> replay_provenance(
    const std::vector<std::string>& provenance,
    const std::vector<DataBlock>& raw) {
  PreprocessSpec spec;
  for (const auto& s : provenance) spec.steps.push_back(parse_preprocess_step(s));
  return apply_preprocess(spec, raw);
}

}  // namespace cdfuse
