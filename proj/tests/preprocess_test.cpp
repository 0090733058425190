#include "cdfuse/preprocess.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace cdfuse;
using testutil::random_matrix;

namespace {

DataBlock small_block() {
  Matrix m(3, 1);
  m << 1, 2, 3;
  return make_block(m);
}

}  // namespace

TEST(CenterColumns, SubtractsMeans) {
  const DataBlock out = center_columns(small_block());
  EXPECT_NEAR(out.values(0, 0), -1.0, 1e-14);
  EXPECT_NEAR(out.values(1, 0), 0.0, 1e-14);
  EXPECT_NEAR(out.values(2, 0), 1.0, 1e-14);
  EXPECT_EQ(out.provenance.back(), "center");
}

TEST(CenterColumns, IdempotentOnCenteredData) {
  const DataBlock once = center_columns(small_block());
  const DataBlock twice = center_columns(once);
  EXPECT_LT((twice.values - once.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CenterColumns, RandomBlockHasZeroColumnSums) {
  const DataBlock out = center_columns(make_block(random_matrix(5, 3, 4)));
  for (Index j = 0; j < 3; ++j)
    EXPECT_LT(std::abs(out.values.col(j).sum()), 1e-12);
}

TEST(CenterColumns, SingleRowRejected) {
  EXPECT_THROW(center_columns(make_block(Matrix::Ones(1, 2))), input_error);
}

TEST(Autoscale, UnitSdColumnUnchanged) {
  Matrix m(3, 1);
  m << -1, 0, 1;  // sample sd exactly 1
  const DataBlock out = autoscale(make_block(m));
  EXPECT_NEAR(out.values(0, 0), -1.0, 1e-14);
  EXPECT_NEAR(out.values(2, 0), 1.0, 1e-14);
}

TEST(Autoscale, ConstantColumnErrorNamesColumn) {
  Matrix m(3, 2);
  m.col(0) = Vector::LinSpaced(3, 0, 2);
  m.col(1).setConstant(7.0);
  DataBlock b = make_block(m);
  b.col_labels = {"fine", "flat"};
  try {
    autoscale(b);
    FAIL() << "expected input_error";
  } catch (const input_error& e) {
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
  }
}

TEST(Autoscale, AllColumnsReachUnitSd) {
  const DataBlock out =
      autoscale(center_columns(make_block(random_matrix(8, 4, 5))));
  for (Index j = 0; j < 4; ++j) {
    const double mean = out.values.col(j).mean();
    const double sd = std::sqrt(
        (out.values.col(j).array() - mean).square().sum() / (8 - 1));
    EXPECT_NEAR(sd, 1.0, 1e-12);
  }
}

TEST(SqrtTransform, NegativeEntryNamesCoordinates) {
  Matrix m(2, 2);
  m << 1, 4, 9, -1;
  DataBlock b = make_block(m);
  b.row_labels = {"r1", "r2"};
  b.col_labels = {"c1", "c2"};
  try {
    sqrt_transform(b);
    FAIL() << "expected input_error";
  } catch (const input_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("r2"), std::string::npos);
    EXPECT_NE(msg.find("c2"), std::string::npos);
  }
  m(1, 1) = 16;
  const DataBlock out = sqrt_transform(make_block(m));
  EXPECT_NEAR(out.values(1, 1), 4.0, 1e-14);
}

TEST(MultilevelCenter, RemovesPerSubjectProfile) {
  Matrix m(4, 1);
  m << 1, 3, 10, 14;
  DataBlock b = make_block(m);
  b.row_labels = {"s1_a", "s1_b", "s2_a", "s2_b"};
  const DataBlock out = multilevel_center(b);
  EXPECT_NEAR(out.values(0, 0), -1.0, 1e-14);
  EXPECT_NEAR(out.values(1, 0), 1.0, 1e-14);
  EXPECT_NEAR(out.values(2, 0), -2.0, 1e-14);
  EXPECT_NEAR(out.values(3, 0), 2.0, 1e-14);
}

TEST(MultilevelCenter, SingleGroupEqualsCenterColumns) {
  DataBlock b = make_block(random_matrix(5, 3, 6));
  for (auto& label : b.row_labels) label = "one_" + label;
  const DataBlock ml = multilevel_center(b);
  const DataBlock plain = center_columns(b);
  EXPECT_LT((ml.values - plain.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultilevelCenter, RepeatedMeasuresLayoutAccepted) {
  // 14 subjects x 4 samples = 56 rows
  Matrix m = random_matrix(56, 3, 7);
  DataBlock b = make_block(m);
  for (int s = 0; s < 14; ++s)
    for (int t = 0; t < 4; ++t)
      b.row_labels[static_cast<std::size_t>(s * 4 + t)] =
          "subj" + std::to_string(s + 1) + "_t" + std::to_string(t + 1);
  const DataBlock out = multilevel_center(b);
  // every subject's column means vanish
  for (int s = 0; s < 14; ++s) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(3);
    for (int t = 0; t < 4; ++t) mean += out.values.row(s * 4 + t);
    EXPECT_LT(mean.cwiseAbs().maxCoeff() / 4, 1e-12);
  }
}

TEST(MultilevelCenter, MissingGroupKeyRejected) {
  DataBlock b = make_block(random_matrix(3, 2, 8));
  b.row_labels = {"has_key", "alsokey_x", "nokey"};
  EXPECT_THROW(multilevel_center(b), input_error);
}

TEST(BlockScale, ScalesToUnitNorm) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = 4.0;  // Frobenius norm 5
  const auto out = block_scale({make_block(m)});
  EXPECT_NEAR(out[0].values(0, 0), 0.6, 1e-14);
  EXPECT_NEAR(out[0].values.norm(), 1.0, 1e-14);
}

TEST(BlockScale, TwoBlocksBothReachUnitNorm) {
  Matrix a = random_matrix(4, 3, 9);
  Matrix b = random_matrix(4, 5, 10);
  a *= 3.0 / a.norm();
  b *= 7.0 / b.norm();
  const auto out = block_scale({make_block(a), make_block(b)},
                               BlockScaleMode::sum_of_squares_one);
  EXPECT_NEAR(out[0].values.squaredNorm(), 1.0, 1e-12);
  EXPECT_NEAR(out[1].values.squaredNorm(), 1.0, 1e-12);
}

TEST(BlockScale, UnitNormBlockUnchanged) {
  Matrix m = random_matrix(3, 3, 11);
  m /= m.norm();
  const auto out = block_scale({make_block(m)});
  EXPECT_LT((out[0].values - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BlockScale, ZeroBlockRejected) {
  EXPECT_THROW(block_scale({make_block(Matrix::Zero(2, 2))}), input_error);
}

TEST(Provenance, ReplayReproducesBitForBit) {
  DataBlock raw = make_block(random_matrix(12, 4, 12).cwiseAbs());
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 4; ++t)
      raw.row_labels[static_cast<std::size_t>(s * 4 + t)] =
          "g" + std::to_string(s) + "_" + std::to_string(t);
  const PreprocessSpec spec = preprocess_preset("multilevel");
  const auto processed = apply_preprocess(spec, {raw});
  const auto replayed = replay_provenance(processed[0].provenance, {raw});
  ASSERT_EQ(processed[0].values.rows(), replayed[0].values.rows());
  // exact replay, not approximate
  EXPECT_TRUE((processed[0].values.array() == replayed[0].values.array()).all());
}

TEST(Provenance, StepsApplyInListedOrder) {
  const PreprocessSpec spec = parse_preprocess_spec("center,block_scale");
  const auto out = apply_preprocess(spec, {make_block(random_matrix(6, 3, 13))});
  ASSERT_EQ(out[0].provenance.size(), 2u);
  EXPECT_EQ(out[0].provenance[0], "center");
  EXPECT_EQ(out[0].provenance[1], "block_scale:frobenius");
  EXPECT_NEAR(out[0].values.norm(), 1.0, 1e-12);
  for (Index j = 0; j < 3; ++j)
    EXPECT_LT(std::abs(out[0].values.col(j).sum()), 1e-12);
}

TEST(PreprocessSpec, UnknownStepRejected) {
  EXPECT_THROW(parse_preprocess_spec("frobnicate"), config_error);
  EXPECT_THROW(preprocess_preset("nope"), config_error);
}
