// Command-line front door: dataset ingestion, preprocessing presets,
// method execution, cross-method comparison and report emission.
//
// Exit codes: 0 success, 2 input error, 3 configuration error,
// 4 numerical failure. CDFUSE_THREADS sets the default parallelism.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdfuse/cdfuse.hpp"

namespace {

using namespace cdfuse;

struct CommonArgs {
  std::vector<std::string> block_paths;
  std::string out_dir;
  std::string preprocess_steps;
  std::string preset = "none";
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool needs_blocks) {
  if (needs_blocks)
    cmd->add_option("--blocks", args.block_paths,
                    "input block CSV files (comma separated)")
        ->required()
        ->delimiter(',');
  cmd->add_option("--out", args.out_dir, "output directory (one per run)")
      ->required();
  cmd->add_option("--preprocess", args.preprocess_steps,
                  "preprocessing steps, e.g. center,block_scale:frobenius");
  cmd->add_option("--preset", args.preset,
                  "preprocessing preset: none, standard, multilevel");
  cmd->add_option("--seed", args.seed, "seed for all randomness of the run");
  cmd->add_option("--threads", args.threads, "worker threads (0 = default)");
}

struct LoadedBlocks {
  std::vector<DataBlock> raw;
  std::vector<DataBlock> processed;
  PreprocessSpec spec;
};

LoadedBlocks load_blocks(const CommonArgs& args) {
  LoadedBlocks out;
  for (const auto& p : args.block_paths) out.raw.push_back(ingest_csv(p));
  require_shared_rows(out.raw);
  out.spec = args.preprocess_steps.empty()
                 ? preprocess_preset(args.preset)
                 : parse_preprocess_spec(args.preprocess_steps);
  out.processed = apply_preprocess(out.spec, out.raw);
  return out;
}

Json blocks_summary(const CommonArgs& args, const LoadedBlocks& blocks) {
  Json arr = Json::array();
  for (std::size_t k = 0; k < blocks.processed.size(); ++k) {
    arr.push_back({{"path", args.block_paths[k]},
                   {"rows", blocks.processed[k].rows()},
                   {"cols", blocks.processed[k].cols()},
                   {"preprocess", blocks.processed[k].provenance}});
  }
  return arr;
}

Json run_header(const std::string& method, const CommonArgs& args,
                const LoadedBlocks& blocks) {
  return Json{{"method", method},
              {"seed", args.seed},
              {"blocks", blocks_summary(args, blocks)}};
}

void write_scores(OutputDir& dir, const std::vector<std::string>& row_labels,
                  const std::vector<std::string>& names, const Matrix& scores) {
  Matrix rounded = scores;
  write_labeled_csv(dir.path("scores.csv"), rounded, row_labels, names);
}

void write_loadings(OutputDir& dir, const std::vector<DataBlock>& blocks,
                    const std::vector<Matrix>& loadings,
                    const std::vector<std::string>& names) {
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    write_labeled_csv(dir.path("loadings_block" + std::to_string(k + 1) +
                               ".csv"),
                      loadings[k], blocks[k].col_labels, names, "variable");
  }
}

void write_variance_csv(OutputDir& dir, const std::string& name,
                        const std::vector<VarianceTable>& tables) {
  std::ofstream out(dir.path(name), std::ios::binary);
  out << "block,part,kind,value,percent\n";
  for (std::size_t k = 0; k < tables.size(); ++k)
    for (const auto& e : tables[k].entries)
      out << (k + 1) << "," << e.name << ","
          << (e.kind == VarianceKind::ss ? "SS" : "ESS") << ","
          << format_double(e.value) << "," << format_double(e.percent)
          << "\n";
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonArgs& args, const std::string& cols_csv,
                 Index rows, const std::string& common_csv,
                 const std::string& distinct_csv, const std::string& snr_csv,
                 const std::string& scales_csv, double cone_deg,
                 bool non_orthogonal) {
  SyntheticSpec spec;
  spec.n_rows = rows;
  spec.seed = args.seed;
  spec.common_score_cone_deg = cone_deg;
  spec.orthonormal_scores = !non_orthogonal;
  auto parse_list = [](const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(std::stod(item));
    return out;
  };
  for (double v : parse_list(cols_csv))
    spec.block_cols.push_back(static_cast<Index>(v));
  for (double v : parse_list(distinct_csv))
    spec.distinct_dims.push_back(static_cast<Index>(v));
  if (!snr_csv.empty()) spec.noise_snr_db = parse_list(snr_csv);
  if (!scales_csv.empty()) spec.block_scales = parse_list(scales_csv);
  // common spec: "12:1,123:2" means dim-1 space shared by blocks 1,2 and
  // a dim-2 space shared by all three.
  {
    std::stringstream ss(common_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw config_error("simulate: common spec entries look like 12:1");
      std::uint32_t mask = 0;
      for (char ch : item.substr(0, colon)) {
        if (ch < '1' || ch > '9')
          throw config_error("simulate: bad block digit in '" + item + "'");
        mask |= 1u << (ch - '1');
      }
      spec.common_dims[mask] =
          static_cast<Index>(std::stol(item.substr(colon + 1)));
    }
  }

  const SyntheticData data = generate(spec);
  OutputDir dir(args.out_dir);
  for (std::size_t k = 0; k < data.blocks.size(); ++k)
    write_block_csv(dir.path("block" + std::to_string(k + 1) + ".csv"),
                    data.blocks[k]);
  for (const auto& [mask, basis] : data.common_bases) {
    std::string blocks_str;
    for (int b = 1; b <= spec.n_blocks(); ++b)
      if ((mask >> (b - 1)) & 1u) blocks_str += std::to_string(b);
    write_labeled_csv(
        dir.path("ground_truth_common_" + blocks_str + ".csv"), basis.basis,
        data.blocks[0].row_labels,
        numbered_names("basis", basis.dim()));
  }
  for (std::size_t k = 0; k < data.distinct_bases.size(); ++k) {
    if (data.distinct_bases[k].dim() == 0) continue;
    write_labeled_csv(
        dir.path("ground_truth_distinct_" + std::to_string(k + 1) + ".csv"),
        data.distinct_bases[k].basis, data.blocks[0].row_labels,
        numbered_names("basis", data.distinct_bases[k].dim()));
  }

  Json report{{"method", "simulate"},
              {"seed", args.seed},
              {"rows", spec.n_rows},
              {"trivial_full_intersection", data.trivial_full_intersection}};
  if (data.trivial_full_intersection)
    report["note"] =
        "some block has more variables than rows: the raw column spaces "
        "share a full-dimensional subspace trivially";
  Json blocks = Json::array();
  for (std::size_t k = 0; k < data.blocks.size(); ++k)
    blocks.push_back({{"file", "block" + std::to_string(k + 1) + ".csv"},
                      {"cols", spec.block_cols[k]},
                      {"distinct_dim", spec.distinct_dims[k]}});
  report["blocks"] = blocks;
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_preprocess(const CommonArgs& args) {
  const LoadedBlocks blocks = load_blocks(args);
  OutputDir dir(args.out_dir);
  for (std::size_t k = 0; k < blocks.processed.size(); ++k)
    write_block_csv(dir.path("block" + std::to_string(k + 1) + ".csv"),
                    blocks.processed[k]);
  Json report = run_header("preprocess", args, blocks);
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_sca(const CommonArgs& args, Index components) {
  const LoadedBlocks blocks = load_blocks(args);
  const ScaModel model = fit_sca(blocks.processed, components);
  OutputDir dir(args.out_dir);
  const auto names = numbered_names("sca", components);
  write_scores(dir, blocks.processed[0].row_labels, names, model.scores);
  write_loadings(dir, blocks.processed, model.loadings, names);
  write_variance_csv(dir, "variance.csv", model.explained);
  {
    std::ofstream out(dir.path("scree.csv"), std::ios::binary);
    out << "component,overall_percent,cumulative_percent";
    for (std::size_t k = 0; k < blocks.processed.size(); ++k)
      out << ",block" << (k + 1) << "_percent";
    out << "\n";
    for (const auto& row : scree_table(model)) {
      out << row.component << "," << format_double(row.overall_percent) << ","
          << format_double(row.cumulative_percent);
      for (double p : row.per_block_percent) out << "," << format_double(p);
      out << "\n";
    }
  }
  Json report = run_header("sca", args, blocks);
  report["parameters"] = {{"components", components}};
  report["singular_values"] = to_json(model.singular_values);
  Json variance = Json::array();
  for (const auto& t : model.explained) variance.push_back(to_json(t));
  report["variance"] = variance;
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_gca(const CommonArgs& args, Index components, double ridge_blend) {
  const LoadedBlocks blocks = load_blocks(args);
  GcaOptions options;
  options.ridge_blend = ridge_blend;
  const GcaModel model = fit_gca(blocks.processed, components, options);
  OutputDir dir(args.out_dir);
  const auto names = numbered_names("canonical", components);
  write_scores(dir, blocks.processed[0].row_labels, names,
               model.consensus_scores);
  write_loadings(dir, blocks.processed, model.loadings, names);
  {
    // Correlation-vs-explained-variance table, one row per component.
    std::ofstream out(dir.path("correlations.csv"), std::ios::binary);
    out << "component,canonical_correlation";
    for (std::size_t k = 0; k < blocks.processed.size(); ++k)
      out << ",block" << (k + 1) << "_explained_percent";
    out << "\n";
    for (Index a = 0; a < components; ++a) {
      out << (a + 1) << ","
          << format_double(model.canonical_correlations(a));
      for (std::size_t k = 0; k < blocks.processed.size(); ++k)
        out << ","
            << format_double(
                   model.explained_per_block[k][static_cast<std::size_t>(a)]);
      out << "\n";
    }
  }
  Json report = run_header("gca", args, blocks);
  report["parameters"] = {{"components", components},
                          {"ridge_blend", ridge_blend}};
  report["criterion_value"] = report_round(model.criterion_value);
  report["canonical_correlations"] = to_json(model.canonical_correlations);
  report["eigenvalues"] = to_json(model.eigenvalues);
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_pca_gca(const CommonArgs& args, const std::vector<Index>& pca_ranks,
                double threshold) {
  const LoadedBlocks blocks = load_blocks(args);
  const PcaGcaModel model =
      fit_pca_gca(block_values(blocks.processed), pca_ranks, threshold);
  OutputDir dir(args.out_dir);

  std::vector<std::string> names;
  Index total_cols = 0;
  for (std::size_t k = 0; k < blocks.processed.size(); ++k)
    total_cols += model.common_scores[k].cols() +
                  model.distinct_scores[k].cols();
  Matrix scores(blocks.processed[0].rows(), total_cols);
  Index at = 0;
  for (std::size_t k = 0; k < blocks.processed.size(); ++k) {
    for (Index c = 0; c < model.common_scores[k].cols(); ++c) {
      scores.col(at++) = model.common_scores[k].col(c);
      names.push_back("common" + std::to_string(k + 1) + "." +
                      std::to_string(c + 1));
    }
  }
  for (std::size_t k = 0; k < blocks.processed.size(); ++k) {
    for (Index c = 0; c < model.distinct_scores[k].cols(); ++c) {
      scores.col(at++) = model.distinct_scores[k].col(c);
      names.push_back("distinct" + std::to_string(k + 1) + "." +
                      std::to_string(c + 1));
    }
  }
  write_scores(dir, blocks.processed[0].row_labels, names, scores);
  write_variance_csv(dir, "variance.csv", model.explained);
  {
    std::ofstream out(dir.path("correlations.csv"), std::ios::binary);
    out << "component,canonical_correlation,common\n";
    for (Index a = 0; a < model.gca.n_components(); ++a)
      out << (a + 1) << ","
          << format_double(model.gca.canonical_correlations(a)) << ","
          << (a < model.common_count ? 1 : 0) << "\n";
  }
  Json report = run_header("pca-gca", args, blocks);
  Json ranks = Json::array();
  for (Index r : pca_ranks) ranks.push_back(r);
  report["parameters"] = {{"pca_ranks", ranks},
                          {"correlation_threshold", threshold}};
  report["common_count"] = model.common_count;
  report["canonical_correlations"] =
      to_json(model.gca.canonical_correlations);
  Json variance = Json::array();
  for (const auto& t : model.explained) variance.push_back(to_json(t));
  report["variance"] = variance;
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_o2pls(const CommonArgs& args, Index common, Index ortho1,
              Index ortho2) {
  const LoadedBlocks blocks = load_blocks(args);
  if (blocks.processed.size() != 2)
    throw input_error("o2pls: exactly two blocks required");
  const O2plsModel model = fit_o2pls(blocks.processed[0].values,
                                     blocks.processed[1].values, common,
                                     ortho1, ortho2);
  OutputDir dir(args.out_dir);
  std::vector<std::string> names;
  Matrix scores(blocks.processed[0].rows(),
                2 * common + model.ortho_scores_1.cols() +
                    model.ortho_scores_2.cols());
  Index at = 0;
  for (Index c = 0; c < common; ++c, ++at) {
    scores.col(at) = model.common_scores_1.col(c);
    names.push_back("common1." + std::to_string(c + 1));
  }
  for (Index c = 0; c < common; ++c, ++at) {
    scores.col(at) = model.common_scores_2.col(c);
    names.push_back("common2." + std::to_string(c + 1));
  }
  for (Index c = 0; c < model.ortho_scores_1.cols(); ++c, ++at) {
    scores.col(at) = model.ortho_scores_1.col(c);
    names.push_back("distinct1." + std::to_string(c + 1));
  }
  for (Index c = 0; c < model.ortho_scores_2.cols(); ++c, ++at) {
    scores.col(at) = model.ortho_scores_2.col(c);
    names.push_back("distinct2." + std::to_string(c + 1));
  }
  write_scores(dir, blocks.processed[0].row_labels, names, scores);
  write_variance_csv(dir, "variance.csv", {model.explained_1, model.explained_2});
  Json report = run_header("o2pls", args, blocks);
  report["parameters"] = {{"common", common},
                          {"orthogonal_1", ortho1},
                          {"orthogonal_2", ortho2}};
  report["maxdiff_values"] = to_json(model.maxdiff_values);
  report["variance"] =
      Json::array({to_json(model.explained_1), to_json(model.explained_2)});
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_disco(const CommonArgs& args, Index components,
              const std::string& targets_text) {
  const LoadedBlocks blocks = load_blocks(args);
  DiscoOptions options;
  options.seed = args.seed == 0 ? options.seed : args.seed;
  options.threads = args.threads;
  std::optional<std::vector<TargetStructure>> subset;
  if (!targets_text.empty()) {
    subset.emplace();
    std::stringstream ss(targets_text);
    std::string item;
    while (std::getline(ss, item, ';'))
      if (!item.empty())
        subset->push_back(parse_target(
            item, static_cast<int>(blocks.processed.size())));
  }
  const std::vector<DiscoModel> models =
      fit_disco(blocks.processed, components,
                subset ? &*subset : nullptr, options);
  OutputDir dir(args.out_dir);
  {
    // The non-congruence sweep, ranked ascending; ties with the best are
    // flagged rather than auto-selected.
    std::ofstream out(dir.path("noncongruence.csv"), std::ios::binary);
    out << "rank,target,non_congruence,masked_ss,masked_cells,tied_with_best\n";
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& m = models[i];
      out << (i + 1) << "," << m.target.encode() << ","
          << (m.constrained() ? format_double(m.non_congruence)
                              : std::string("unconstrained"))
          << "," << format_double(m.masked_ss) << "," << m.masked_cells << ","
          << (m.tied_with_best ? 1 : 0) << "\n";
    }
  }
  const DiscoModel& best = models.front();
  std::vector<std::string> names;
  for (Index c = 0; c < components; ++c) {
    const std::string label = best.target.label(c);
    std::string group;
    if (best.target.is_common(c))
      group = "common";
    else if (best.target.is_distinct(c))
      group = "distinct" + label.substr(2);
    else
      group = "partial-" + label;
    names.push_back(group + "." + std::to_string(c + 1));
  }
  write_scores(dir, blocks.processed[0].row_labels, names, best.scores);
  write_loadings(dir, blocks.processed, best.loadings, names);
  write_variance_csv(dir, "variance.csv", best.explained);
  Json report = run_header("disco", args, blocks);
  report["parameters"] = {{"components", components}};
  report["selected_target"] = best.target.encode();
  report["non_congruence"] =
      best.constrained() ? Json(report_round(best.non_congruence))
                         : Json("unconstrained");
  Json tied = Json::array();
  for (const auto& m : models)
    if (m.tied_with_best) tied.push_back(m.target.encode());
  report["tied_with_best"] = tied;
  Json variance = Json::array();
  for (const auto& t : best.explained) variance.push_back(to_json(t));
  report["variance"] = variance;
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_gsvd(const CommonArgs& args, Index components, double distinct_high,
             double common_band) {
  const LoadedBlocks blocks = load_blocks(args);
  if (blocks.processed.size() != 2)
    throw input_error("gsvd: exactly two blocks required");
  GsvdThresholds thresholds;
  thresholds.distinct_high = distinct_high;
  thresholds.common_band = common_band;
  const GsvdModel model =
      fit_adapted_gsvd(blocks.processed[0].values, blocks.processed[1].values,
                       components, thresholds);
  OutputDir dir(args.out_dir);
  {
    std::ofstream out(dir.path("gsv_table.csv"), std::ios::binary);
    out << "component,d1_squared,d2_squared,label\n";
    for (Index j = 0; j < components; ++j)
      out << (j + 1) << "," << format_double(model.d1(j) * model.d1(j)) << ","
          << format_double(model.d2(j) * model.d2(j)) << ","
          << to_string(model.labels[static_cast<std::size_t>(j)]) << "\n";
  }
  std::vector<std::string> names;
  std::map<std::string, int> counters;
  for (Index j = 0; j < components; ++j) {
    std::string group;
    switch (model.labels[static_cast<std::size_t>(j)]) {
      case GsvLabel::common: group = "common"; break;
      case GsvLabel::distinct1: group = "distinct1"; break;
      case GsvLabel::distinct2: group = "distinct2"; break;
      case GsvLabel::ambiguous: group = "ambiguous"; break;
    }
    names.push_back(group + "." + std::to_string(++counters[group]));
  }
  write_scores(dir, blocks.processed[0].row_labels, names,
               model.shared_scores);
  write_variance_csv(dir, "variance.csv",
                     {model.explained_1, model.explained_2});
  Json report = run_header("gsvd", args, blocks);
  report["parameters"] = {{"components", components},
                          {"distinct_high", distinct_high},
                          {"common_band", common_band}};
  report["d1"] = to_json(model.d1);
  report["d2"] = to_json(model.d2);
  Json labels = Json::array();
  for (auto l : model.labels) labels.push_back(to_string(l));
  report["labels"] = labels;
  report["variance"] =
      Json::array({to_json(model.explained_1), to_json(model.explained_2)});
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_jive(const CommonArgs& args, Index joint_rank,
             const std::vector<Index>& individual_ranks, bool select,
             Index max_joint, Index max_individual, int n_perm, double alpha) {
  const LoadedBlocks blocks = load_blocks(args);
  OutputDir dir(args.out_dir);
  Index jr = joint_rank;
  std::vector<Index> ir = individual_ranks;
  Json selection;
  if (select) {
    std::vector<Index> max_ir(blocks.processed.size(), max_individual);
    const RankSelectionReport report = select_ranks_permutation(
        block_values(blocks.processed), max_joint, max_ir, n_perm, alpha,
        args.seed);
    jr = report.joint_rank;
    ir = report.individual_ranks;
    std::ofstream out(dir.path("rank_selection.csv"), std::ios::binary);
    out << "scope,candidate,observed,null_quantile\n";
    for (std::size_t r = 0; r < report.joint_observed.size(); ++r)
      out << "joint," << (r + 1) << ","
          << format_double(report.joint_observed[r]) << ","
          << format_double(report.joint_null_quantile[r]) << "\n";
    for (std::size_t k = 0; k < report.individual_observed.size(); ++k)
      for (std::size_t r = 0; r < report.individual_observed[k].size(); ++r)
        out << "block" << (k + 1) << "," << (r + 1) << ","
            << format_double(report.individual_observed[k][r]) << ","
            << format_double(report.individual_null_quantile[k][r]) << "\n";
    selection = Json{{"joint_rank", jr}};
    Json irj = Json::array();
    for (Index v : ir) irj.push_back(v);
    selection["individual_ranks"] = irj;
  }
  if (ir.empty()) ir.assign(blocks.processed.size(), 0);
  if (ir.size() != blocks.processed.size())
    throw config_error("jive: one individual rank per block required");

  const JiveModel model = fit_jive(block_values(blocks.processed), jr, ir);
  std::vector<std::string> names;
  Index total = jr;
  for (Index v : ir) total += v;
  Matrix scores(blocks.processed[0].rows(), total);
  Index at = 0;
  for (Index c = 0; c < jr; ++c, ++at) {
    scores.col(at) = model.joint_scores.col(c);
    names.push_back("common." + std::to_string(c + 1));
  }
  for (std::size_t k = 0; k < blocks.processed.size(); ++k)
    for (Index c = 0; c < model.individual_scores[k].cols(); ++c, ++at) {
      scores.col(at) = model.individual_scores[k].col(c);
      names.push_back("distinct" + std::to_string(k + 1) + "." +
                      std::to_string(c + 1));
    }
  write_scores(dir, blocks.processed[0].row_labels, names, scores);
  write_variance_csv(dir, "variance.csv", model.explained);
  Json report = run_header("jive", args, blocks);
  report["parameters"] = {{"joint_rank", jr}, {"iterations", model.iterations}};
  Json irj = Json::array();
  for (Index v : ir) irj.push_back(v);
  report["parameters"]["individual_ranks"] = irj;
  if (!selection.is_null()) report["rank_selection"] = selection;
  Json history = Json::array();
  for (double f : model.fit_history) history.push_back(report_round(f));
  report["fit_history"] = history;
  Json variance = Json::array();
  for (const auto& t : model.explained) variance.push_back(to_json(t));
  report["variance"] = variance;
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_srdf(const CommonArgs& args, Index components, double lambda,
             const std::string& grid_csv) {
  const LoadedBlocks blocks = load_blocks(args);
  if (blocks.processed.size() != 2)
    throw input_error("srdf: exactly two blocks required");
  OutputDir dir(args.out_dir);
  SrdfOptions options;
  options.threads = args.threads;

  std::vector<double> grid;
  if (!grid_csv.empty()) {
    std::stringstream ss(grid_csv);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) grid.push_back(std::stod(item));
  } else {
    grid.push_back(lambda);
  }

  const std::vector<SrdfPathEntry> path =
      lambda_path(blocks.processed[0].values, blocks.processed[1].values,
                  components, grid, args.seed, options);
  {
    std::ofstream out(dir.path("lambda_path.csv"), std::ios::binary);
    out << "lambda,objective,fit1,fit2";
    for (Index c = 0; c < components; ++c) out << ",d1_" << (c + 1);
    for (Index c = 0; c < components; ++c) out << ",d2_" << (c + 1);
    out << ",pattern,active,count_increased\n";
    for (const auto& e : path) {
      out << format_double(e.lambda) << "," << format_double(e.model.objective)
          << "," << format_double(e.model.fit_1) << ","
          << format_double(e.model.fit_2);
      for (Index c = 0; c < components; ++c)
        out << "," << format_double(e.model.d1(c));
      for (Index c = 0; c < components; ++c)
        out << "," << format_double(e.model.d2(c));
      out << ",\"" << e.pattern << "\"," << e.active_count << ","
          << (e.count_increased ? 1 : 0) << "\n";
    }
  }
  const SrdfModel& last = path.back().model;
  std::vector<std::string> names;
  std::map<std::string, int> counters;
  for (std::size_t c = 0; c < last.classes.size(); ++c) {
    std::string group;
    switch (last.classes[c]) {
      case SrdfClass::common: group = "common"; break;
      case SrdfClass::distinct1: group = "distinct1"; break;
      case SrdfClass::distinct2: group = "distinct2"; break;
      case SrdfClass::inactive: group = "inactive"; break;
    }
    names.push_back(group + "." + std::to_string(++counters[group]));
  }
  write_scores(dir, blocks.processed[0].row_labels, names,
               last.shared_scores);
  Json report = run_header("srdf", args, blocks);
  report["parameters"] = {{"components", components}};
  Json grid_json = Json::array();
  for (double g : grid) grid_json.push_back(report_round(g));
  report["parameters"]["lambda_grid"] = grid_json;
  Json entries = Json::array();
  for (const auto& e : path)
    entries.push_back({{"lambda", report_round(e.lambda)},
                       {"objective", report_round(e.model.objective)},
                       {"pattern", e.pattern},
                       {"active", e.active_count},
                       {"count_increased", e.count_increased}});
  report["path"] = entries;
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

int cmd_compare(const CommonArgs& args, const std::string& run_a,
                const std::string& run_b) {
  const DataBlock sa =
      ingest_csv((std::filesystem::path(run_a) / "scores.csv").string());
  const DataBlock sb =
      ingest_csv((std::filesystem::path(run_b) / "scores.csv").string());
  require_shared_rows({sa, sb});
  NamedComponents a{sa.col_labels, sa.values};
  NamedComponents b{sb.col_labels, sb.values};
  const ComparisonResult result = compare_components(a, b);
  OutputDir dir(args.out_dir);
  write_labeled_csv(dir.path("correlations.csv"), result.correlations,
                    result.row_names, result.col_names, "component");
  {
    std::ofstream out(dir.path("subspace_angles.csv"), std::ios::binary);
    out << "family,group_a,group_b,cosines\n";
    for (const auto& m : result.matched) {
      out << m.family << "," << m.group_a << "," << m.group_b << ",\"";
      for (Index i = 0; i < m.cosines.size(); ++i) {
        if (i > 0) out << ";";
        out << format_double(m.cosines(i));
      }
      out << "\"\n";
    }
  }
  Json report{{"method", "compare"},
              {"run_a", run_a},
              {"run_b", run_b}};
  Json matches = Json::array();
  for (const auto& m : result.matched)
    matches.push_back({{"family", m.family},
                       {"group_a", m.group_a},
                       {"group_b", m.group_b},
                       {"cosines", to_json(m.cosines)}});
  report["subspace_matches"] = matches;
  write_json(dir.path("report.json"), report);
  dir.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cdfuse: common/distinct subspace decompositions of column-matched "
      "data blocks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value configuration file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  CommonArgs args;

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "generate blocks with known common/distinct structure");
  std::string sim_cols = "8,10", sim_common = "12:1", sim_distinct = "1,1";
  std::string sim_snr, sim_scales;
  Index sim_rows = 30;
  double sim_cone = 0.0;
  bool sim_non_orthogonal = false;
  add_common_options(simulate, args, false);
  simulate->add_option("--rows", sim_rows, "number of samples");
  simulate->add_option("--cols", sim_cols, "variables per block, e.g. 8,10");
  simulate->add_option("--common", sim_common,
                       "common subspace spec, e.g. 12:1,123:2");
  simulate->add_option("--distinct", sim_distinct,
                       "distinct dimensions per block, e.g. 1,1");
  simulate->add_option("--snr", sim_snr, "per-block SNR in dB (empty = none)");
  simulate->add_option("--scales", sim_scales, "per-block scale factors");
  simulate->add_option("--cone-deg", sim_cone,
                       "tilt per-block common scores by this angle");
  simulate->add_flag("--non-orthogonal", sim_non_orthogonal,
                     "generic (non-orthonormalized) score directions");

  // preprocess
  auto* preprocess =
      app.add_subcommand("preprocess", "apply preprocessing and export");
  add_common_options(preprocess, args, true);

  // sca
  auto* sca = app.add_subcommand("sca", "simultaneous component analysis");
  Index sca_components = 2;
  add_common_options(sca, args, true);
  sca->add_option("--components", sca_components, "number of components")
      ->required();

  // gca
  auto* gca = app.add_subcommand("gca", "generalized canonical correlation");
  Index gca_components = 1;
  double gca_ridge = 0.0;
  add_common_options(gca, args, true);
  gca->add_option("--components", gca_components, "number of components")
      ->required();
  gca->add_option("--ridge-blend", gca_ridge,
                  "0 = pure canonical criterion, towards 1 = concatenated "
                  "variance criterion");

  // pca-gca
  auto* pca_gca = app.add_subcommand(
      "pca-gca", "per-block PCA prefilter, then canonical analysis");
  std::vector<Index> pg_ranks;
  double pg_threshold = 0.7;
  add_common_options(pca_gca, args, true);
  pca_gca->add_option("--pca-ranks", pg_ranks, "PCA rank per block")
      ->required()
      ->delimiter(',');
  pca_gca->add_option("--corr-threshold", pg_threshold,
                      "canonical correlation threshold for commonness");

  // o2pls
  auto* o2pls = app.add_subcommand("o2pls", "two-block O2PLS");
  Index o2_common = 1, o2_ortho1 = 0, o2_ortho2 = 0;
  add_common_options(o2pls, args, true);
  o2pls->add_option("--common", o2_common, "number of common components")
      ->required();
  o2pls->add_option("--ortho", [&o2_ortho1, &o2_ortho2](const CLI::results_t& r) {
    std::stringstream ss(r[0]);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) return false;
    o2_ortho1 = std::stol(a);
    o2_ortho2 = std::stol(b);
    return true;
  }, "orthogonal components per block, e.g. 1,1");

  // disco
  auto* disco = app.add_subcommand("disco", "rotation to common/distinct targets");
  Index disco_components = 3;
  std::string disco_targets;
  add_common_options(disco, args, true);
  disco->add_option("--components", disco_components, "number of components")
      ->required();
  disco->add_option("--targets", disco_targets,
                    "optional ';'-separated target subset, e.g. "
                    "\"C-12|D-1|D-2;C-12|C-12|D-1\"");

  // gsvd
  auto* gsvd = app.add_subcommand("gsvd", "adapted generalized SVD");
  Index gsvd_components = 2;
  double gsvd_high = 0.95, gsvd_band = 0.10;
  add_common_options(gsvd, args, true);
  gsvd->add_option("--components", gsvd_components, "number of components")
      ->required();
  gsvd->add_option("--distinct-high", gsvd_high,
                   "d^2 threshold for a distinctive component");
  gsvd->add_option("--common-band", gsvd_band,
                   "|d1^2-d2^2| tolerance for a common component");

  // jive
  auto* jive = app.add_subcommand("jive", "joint plus individual decomposition");
  Index jive_joint = 1;
  std::vector<Index> jive_individual;
  bool jive_select = false;
  Index jive_max_joint = 3, jive_max_individual = 3;
  int jive_nperm = 99;
  double jive_alpha = 0.05;
  add_common_options(jive, args, true);
  jive->add_option("--joint-rank", jive_joint, "joint rank");
  jive->add_option("--individual-ranks", jive_individual,
                   "individual rank per block")
      ->delimiter(',');
  jive->add_flag("--select-ranks", jive_select,
                 "choose ranks by permutation tests");
  jive->add_option("--max-joint", jive_max_joint, "candidate joint ranks");
  jive->add_option("--max-individual", jive_max_individual,
                   "candidate individual ranks");
  jive->add_option("--n-perm", jive_nperm, "permutation replicates");
  jive->add_option("--alpha", jive_alpha, "test level");

  // srdf
  auto* srdf = app.add_subcommand(
      "srdf", "penalized joint factorization with L1 strengths");
  Index srdf_components = 2;
  double srdf_lambda = 0.0;
  std::string srdf_grid;
  add_common_options(srdf, args, true);
  srdf->add_option("--components", srdf_components, "number of components")
      ->required();
  srdf->add_option("--lambda", srdf_lambda, "penalty weight");
  srdf->add_option("--lambda-grid", srdf_grid,
                   "ascending comma-separated penalty grid");

  // compare
  auto* compare = app.add_subcommand("compare", "cross-method comparison");
  std::string cmp_a, cmp_b;
  add_common_options(compare, args, false);
  compare->add_option("--run-a", cmp_a, "first run directory")->required();
  compare->add_option("--run-b", cmp_b, "second run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 3;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(args, sim_cols, sim_rows, sim_common, sim_distinct,
                          sim_snr, sim_scales, sim_cone, sim_non_orthogonal);
    if (preprocess->parsed()) return cmd_preprocess(args);
    if (sca->parsed()) return cmd_sca(args, sca_components);
    if (gca->parsed()) return cmd_gca(args, gca_components, gca_ridge);
    if (pca_gca->parsed()) return cmd_pca_gca(args, pg_ranks, pg_threshold);
    if (o2pls->parsed()) return cmd_o2pls(args, o2_common, o2_ortho1, o2_ortho2);
    if (disco->parsed()) return cmd_disco(args, disco_components, disco_targets);
    if (gsvd->parsed())
      return cmd_gsvd(args, gsvd_components, gsvd_high, gsvd_band);
    if (jive->parsed())
      return cmd_jive(args, jive_joint, jive_individual, jive_select,
                      jive_max_joint, jive_max_individual, jive_nperm,
                      jive_alpha);
    if (srdf->parsed())
      return cmd_srdf(args, srdf_components, srdf_lambda, srdf_grid);
    if (compare->parsed()) return cmd_compare(args, cmp_a, cmp_b);
  } catch (const cdfuse::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 3;
  } catch (const cdfuse::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const cdfuse::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
