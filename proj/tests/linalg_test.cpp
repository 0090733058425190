#include "cdfuse/linalg.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace cdfuse;
using testutil::random_matrix;

TEST(ThinSvd, IdentityHasUnitSingularValues) {
  const SvdResult svd = thin_svd(Matrix::Identity(3, 3));
  ASSERT_EQ(svd.rank(), 3);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(svd.singular_values(i), 1.0, 1e-14);
}

TEST(ThinSvd, RankOneOuterProductNormProduct) {
  Vector u(3), v(2);
  u << 2, 0, 0;
  v << 0, 3;
  // ||u|| = 2, ||v|| = 3: the one singular value is 6.
  const SvdResult svd = thin_svd(u * v.transpose() / 2.0 / 3.0 * 6.0);
  ASSERT_EQ(svd.rank(), 1);
  EXPECT_NEAR(svd.singular_values(0), 6.0, 1e-12);
}

TEST(ThinSvd, ReconstructionMatchesGramSchmidtOracle) {
  const Matrix a = random_matrix(8, 5, 42);
  const SvdResult svd = thin_svd(a);
  EXPECT_LT((svd.reconstruct() - a).norm(), 1e-10 * a.norm());
  // Independent oracle: Gram-Schmidt Q reproduces A via Q (Q'A).
  const Matrix q = testutil::gram_schmidt(a);
  EXPECT_LT((q * (q.transpose() * a) - a).norm(), 1e-10 * a.norm());
  EXPECT_EQ(svd.rank(), q.cols());
}

TEST(ThinSvd, SingularValuesMatchEigenOracle) {
  const Matrix a = random_matrix(7, 4, 7);
  const SvdResult svd = thin_svd(a);
  const auto eig = testutil::jacobi_eigenvalues(a.transpose() * a);
  ASSERT_GE(eig.size(), static_cast<std::size_t>(svd.rank()));
  for (Index i = 0; i < svd.rank(); ++i)
    EXPECT_NEAR(svd.singular_values(i),
                std::sqrt(eig[static_cast<std::size_t>(i)]), 1e-8);
}

TEST(ThinSvd, OrthonormalFactorsAndOrdering) {
  const Matrix a = random_matrix(10, 6, 3);
  const SvdResult svd = thin_svd(a);
  EXPECT_LT((svd.left.transpose() * svd.left -
             Matrix::Identity(svd.rank(), svd.rank()))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  EXPECT_LT((svd.right.transpose() * svd.right -
             Matrix::Identity(svd.rank(), svd.rank()))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  for (Index i = 1; i < svd.rank(); ++i)
    EXPECT_GE(svd.singular_values(i - 1), svd.singular_values(i));
}

TEST(ThinSvd, ErrorsOnBadInput) {
  EXPECT_THROW(thin_svd(Matrix(0, 0)), dimension_error);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(thin_svd(bad), input_error);
}

TEST(PseudoInverse, DiagonalCase) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 4.0;
  const Matrix pinv = pseudo_inverse(a);
  EXPECT_NEAR(pinv(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(pinv(1, 1), 0.25, 1e-14);
  EXPECT_NEAR(pinv(0, 1), 0.0, 1e-14);
}

TEST(PseudoInverse, ZeroMatrixGivesZero) {
  const Matrix pinv = pseudo_inverse(Matrix::Zero(3, 4));
  EXPECT_EQ(pinv.rows(), 4);
  EXPECT_EQ(pinv.cols(), 3);
  EXPECT_EQ(pinv.norm(), 0.0);
}

TEST(PseudoInverse, PenroseConditionsOnRankDeficientMatrix) {
  // rank-2 6x4 matrix
  const Matrix a =
      random_matrix(6, 2, 11) * random_matrix(2, 4, 12);
  const Matrix p = pseudo_inverse(a);
  const double scale = a.norm();
  EXPECT_LT((a * p * a - a).norm(), 1e-9 * scale);
  EXPECT_LT((p * a * p - p).norm(), 1e-9 * p.norm());
  EXPECT_LT(((a * p).transpose() - a * p).norm(), 1e-9);
  EXPECT_LT(((p * a).transpose() - p * a).norm(), 1e-9);
}

TEST(OrthonormalBasis, NormalizesSingleColumn) {
  Matrix a(3, 1);
  a << 3, 4, 0;
  const SubspaceBasis basis = orthonormal_basis(a);
  ASSERT_EQ(basis.dim(), 1);
  // sign convention: largest-magnitude entry positive
  EXPECT_NEAR(basis.basis(0, 0), 0.6, 1e-12);
  EXPECT_NEAR(basis.basis(1, 0), 0.8, 1e-12);
  EXPECT_NEAR(basis.basis(2, 0), 0.0, 1e-12);
}

TEST(OrthonormalBasis, DuplicatedColumnsDropRank) {
  Matrix a(4, 2);
  a.col(0) = random_matrix(4, 1, 5);
  a.col(1) = a.col(0);
  EXPECT_EQ(orthonormal_basis(a).dim(), 1);
}

TEST(OrthonormalBasis, RankMatchesRowReductionOracle) {
  // 10x6 with two duplicated columns: numerical rank 5.
  Matrix a(10, 6);
  a.leftCols(5) = random_matrix(10, 5, 21);
  a.col(5) = a.col(0);
  const SubspaceBasis basis = orthonormal_basis(a);
  EXPECT_EQ(basis.dim(), 5);
  EXPECT_EQ(static_cast<int>(basis.dim()), testutil::row_reduction_rank(a));
}

TEST(OrthonormalBasis, ProjectorReproducesColumnSpace) {
  const Matrix a = random_matrix(9, 4, 33);
  const SubspaceBasis basis = orthonormal_basis(a);
  const Matrix p = basis.projector();
  EXPECT_LT((p * p - p).norm(), 1e-9 * std::max(1.0, p.norm()));
  EXPECT_LT((p * a - a).norm(), 1e-9 * a.norm());
}

TEST(PrincipalAngles, IdenticalSubspacesGiveOnes) {
  const SubspaceBasis b = orthonormal_basis(random_matrix(6, 3, 2));
  const Vector c = principal_angle_cosines(b, b);
  ASSERT_EQ(c.size(), 3);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(c(i), 1.0, 1e-12);
}

TEST(PrincipalAngles, OrthogonalLinesGiveZero) {
  Matrix a = Matrix::Zero(3, 1), b = Matrix::Zero(3, 1);
  a(0, 0) = 1.0;
  b(1, 0) = 1.0;
  const Vector c =
      principal_angle_cosines(orthonormal_basis(a), orthonormal_basis(b));
  ASSERT_EQ(c.size(), 1);
  EXPECT_NEAR(c(0), 0.0, 1e-14);
}

TEST(PrincipalAngles, SharedAxisPattern) {
  Matrix a = Matrix::Zero(4, 2), b = Matrix::Zero(4, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;  // span{e1, e2}
  b(0, 0) = 1.0;
  b(2, 1) = 1.0;  // span{e1, e3}
  const Vector c =
      principal_angle_cosines(orthonormal_basis(a), orthonormal_basis(b));
  ASSERT_EQ(c.size(), 2);
  EXPECT_NEAR(c(0), 1.0, 1e-12);
  EXPECT_NEAR(c(1), 0.0, 1e-12);
}

TEST(PrincipalAngles, SymmetricInArguments) {
  const SubspaceBasis b1 = orthonormal_basis(random_matrix(8, 3, 6));
  const SubspaceBasis b2 = orthonormal_basis(random_matrix(8, 4, 9));
  const Vector c12 = principal_angle_cosines(b1, b2);
  const Vector c21 = principal_angle_cosines(b2, b1);
  ASSERT_EQ(c12.size(), c21.size());
  for (Index i = 0; i < c12.size(); ++i) EXPECT_NEAR(c12(i), c21(i), 1e-12);
}

TEST(PrincipalAngles, MatchesIndependentOracle) {
  const Matrix a = random_matrix(10, 3, 14);
  const Matrix b = random_matrix(10, 4, 15);
  const Vector c =
      principal_angle_cosines(orthonormal_basis(a), orthonormal_basis(b));
  const auto oracle = testutil::principal_cosines_oracle(a, b);
  ASSERT_EQ(static_cast<std::size_t>(c.size()), oracle.size());
  for (Index i = 0; i < c.size(); ++i)
    EXPECT_NEAR(c(i), oracle[static_cast<std::size_t>(i)], 1e-8);
}

TEST(PrincipalAngles, MismatchedAmbientDimsThrow) {
  const SubspaceBasis b1 = orthonormal_basis(random_matrix(5, 2, 1));
  const SubspaceBasis b2 = orthonormal_basis(random_matrix(6, 2, 1));
  EXPECT_THROW(principal_angle_cosines(b1, b2), dimension_error);
}
