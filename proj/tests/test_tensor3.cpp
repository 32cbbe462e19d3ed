#include "cmtf/tensor3.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cmtf;

namespace {

MatrixXd random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

Tensor3d random_tensor(Index n, Index m, Index s, std::mt19937_64& rng) {
  Tensor3d t(n, m, s);
  std::normal_distribution<double> d;
  for (Index k = 0; k < s; ++k)
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i) t(i, j, k) = d(rng);
  return t;
}

}  // namespace

TEST(Tensor3, ConstructionValidatesLength) {
  EXPECT_THROW(Tensor3d(2, 2, 2, VectorXd::Zero(7)), std::invalid_argument);
  Tensor3d t(2, 3, 4);
  EXPECT_EQ(t.data().size(), 24);
  EXPECT_EQ(t.dims(), (std::array<Index, 3>{2, 3, 4}));
}

TEST(Tensor3, SliceMatchesElementAccess) {
  std::mt19937_64 rng(3);
  const Tensor3d t = random_tensor(3, 4, 5, rng);
  for (Index k = 0; k < 5; ++k)
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 3; ++i) EXPECT_EQ(t.slice(k)(i, j), t(i, j, k));
}

TEST(Tensor3, UnfoldSmallExample) {
  Tensor3d t(2, 2, 2);
  for (Index k = 0; k < 2; ++k)
    for (Index j = 0; j < 2; ++j)
      for (Index i = 0; i < 2; ++i) t(i, j, k) = static_cast<double>(i + 2 * j + 4 * k);
  MatrixXd expected(2, 4);
  expected << 0, 2, 4, 6,
              1, 3, 5, 7;
  EXPECT_EQ(unfold(t, 1), expected);
}

TEST(Tensor3, UnfoldMatchesIndexMapping) {
  std::mt19937_64 rng(11);
  const Tensor3d t = random_tensor(3, 4, 5, rng);
  const MatrixXd u1 = unfold(t, 1), u2 = unfold(t, 2), u3 = unfold(t, 3);
  ASSERT_EQ(u1.rows(), 3);
  ASSERT_EQ(u1.cols(), 20);
  ASSERT_EQ(u2.rows(), 4);
  ASSERT_EQ(u2.cols(), 15);
  ASSERT_EQ(u3.rows(), 5);
  ASSERT_EQ(u3.cols(), 12);
  for (Index k = 0; k < 5; ++k)
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 3; ++i) {
        EXPECT_EQ(u1(i, j + k * 4), t(i, j, k));
        EXPECT_EQ(u2(j, i + k * 3), t(i, j, k));
        EXPECT_EQ(u3(k, i + j * 3), t(i, j, k));
      }
}

TEST(Tensor3, UnfoldZeroAndBadMode) {
  const Tensor3d z(2, 3, 4);
  EXPECT_EQ(unfold(z, 2), MatrixXd::Zero(3, 8));
  EXPECT_THROW(unfold(z, 0), std::invalid_argument);
  EXPECT_THROW(unfold(z, 4), std::invalid_argument);
}

TEST(Tensor3, UnfoldRankOne) {
  CpdFactors<double> f{MatrixXd(2, 1), MatrixXd(2, 1), MatrixXd(2, 1)};
  f.A << 1, 2;
  f.B << 1, 0;
  f.C << 1, 1;
  MatrixXd expected(2, 4);
  expected << 1, 2, 0, 0,
              1, 2, 0, 0;
  EXPECT_EQ(unfold(reconstruct(f), 3), expected);
}

TEST(Tensor3, UnfoldingIdentitiesAgainstBruteForce) {
  // X_(1) = A (C kr B)^T, X_(2) = B (C kr A)^T, X_(3) = C (B kr A)^T
  std::mt19937_64 rng(5);
  const CpdFactors<double> f{random_matrix(3, 2, rng), random_matrix(4, 2, rng), random_matrix(5, 2, rng)};
  const Tensor3d t = reconstruct(f);
  Tensor3d brute(3, 4, 5);
  for (Index k = 0; k < 5; ++k)
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 3; ++i)
        for (Index r = 0; r < 2; ++r) brute(i, j, k) += f.A(i, r) * f.B(j, r) * f.C(k, r);
  EXPECT_LT((t.data() - brute.data()).norm(), 1e-12 * brute.data().norm());
  const double scale = brute.data().norm();
  EXPECT_LT((unfold(brute, 1) - f.A * khatri_rao(f.C, f.B).transpose()).norm(), 1e-12 * scale);
  EXPECT_LT((unfold(brute, 2) - f.B * khatri_rao(f.C, f.A).transpose()).norm(), 1e-12 * scale);
  EXPECT_LT((unfold(brute, 3) - f.C * khatri_rao(f.B, f.A).transpose()).norm(), 1e-12 * scale);
}

TEST(Tensor3, KhatriRaoExample) {
  MatrixXd x(2, 2), y(2, 2), expected(4, 2);
  x << 1, 2, 3, 4;
  y << 0, 1, 1, 0;
  expected << 0, 2,
              1, 0,
              0, 4,
              3, 0;
  EXPECT_EQ(khatri_rao(x, y), expected);
}

TEST(Tensor3, KhatriRaoEdgeCases) {
  std::mt19937_64 rng(9);
  const MatrixXd y = random_matrix(3, 4, rng);
  EXPECT_EQ(khatri_rao(MatrixXd::Ones(1, 4), y), y);
  MatrixXd x = random_matrix(2, 4, rng);
  x.col(2).setZero();
  EXPECT_TRUE(khatri_rao(x, y).col(2).isZero(0));
  EXPECT_THROW(khatri_rao(MatrixXd::Ones(2, 3), y), std::invalid_argument);
}

TEST(Tensor3, ReconstructExamples) {
  CpdFactors<double> f{MatrixXd::Ones(2, 1), MatrixXd(2, 1), MatrixXd::Constant(1, 1, 2.0)};
  f.B << 1, -1;
  const Tensor3d t = reconstruct(f);
  MatrixXd expected(2, 2);
  expected << 2, -2, 2, -2;
  EXPECT_EQ(t.slice(0), expected);

  std::mt19937_64 rng(1);
  const CpdFactors<double> z{random_matrix(2, 3, rng), random_matrix(4, 3, rng), MatrixXd::Zero(5, 3)};
  EXPECT_EQ(frob_norm_sq(reconstruct(z)), 0.0);
  EXPECT_EQ(reconstruct(z).dims(), (std::array<Index, 3>{2, 4, 5}));
}

TEST(Tensor3, ReconstructChainRuleSlice) {
  MatrixXd W1(2, 3), W0(3, 2);
  W1 << -1.7, -2.3, 2.5, 0.5, -0.5, 0.2;
  W0 << 2.1, -1.0, 0.4, -1.8, -1.6, -0.2;
  MatrixXd G(1, 3);
  G << 1, 0, 2.5;
  const Tensor3d t = reconstruct(CpdFactors<double>{W1, W0.transpose(), G});
  MatrixXd expected(2, 2);
  expected << -13.57, 0.45, 0.25, -0.6;
  EXPECT_LT((t.slice(0) - expected).norm(), 1e-12);
}

TEST(Tensor3, ReconstructRejectsMismatchedRanks) {
  EXPECT_THROW(reconstruct(CpdFactors<double>{MatrixXd::Ones(2, 2), MatrixXd::Ones(2, 3), MatrixXd::Ones(2, 2)}),
               std::invalid_argument);
}

TEST(Tensor3, FrobeniusNorm) {
  EXPECT_EQ(frob_norm_sq(Tensor3d(2, 2, 2)), 0.0);
  EXPECT_EQ(frob_norm_sq(Tensor3d(1, 1, 1, VectorXd::Constant(1, 3.0))), 9.0);
  EXPECT_EQ(frob_norm_sq(Tensor3d(2, 2, 2, VectorXd::Ones(8))), 8.0);
  EXPECT_EQ(frob_norm_sq(MatrixXd::Constant(2, 3, 2.0)), 24.0);
}

TEST(Tensor3, ArithmeticChecksDims) {
  Tensor3d a(2, 2, 2, VectorXd::Ones(8));
  const Tensor3d b = 2.0 * a;
  EXPECT_EQ(frob_norm_sq(b - a), 8.0);
  EXPECT_THROW(a -= Tensor3d(2, 2, 3), std::invalid_argument);
}
