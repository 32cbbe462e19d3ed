#include "cmtf/sysgen.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cmtf;

namespace {

SyntheticSystem all_kinds_system() {
  SyntheticSystem sys;
  sys.W1 = (MatrixXd(2, 7) << 0.3, -1.1, 0.7, 0.2, -0.4, 0.05, 1.3,
                               -0.8, 0.6, 0.9, -0.2, 0.35, -0.1, 0.4).finished();
  sys.W0 = (MatrixXd(7, 3) << 0.5, -0.2, 0.1,
                              0.3, 0.4, -0.6,
                              -0.7, 0.2, 0.3,
                              0.2, 0.9, -0.1,
                              0.4, -0.3, 0.2,
                              0.6, 0.5, 0.4,
                              -0.1, 0.8, 0.3).finished();
  sys.branches = {{BranchKind::SinPlus, 1.3, 0.2},    {BranchKind::CosPlus, 2.0, -1.5},
                  {BranchKind::SinPlusHalf, 2.0, 0},  {BranchKind::CubicPlusLinear, 1, 0},
                  {BranchKind::Exp, 1, 0},            {BranchKind::InvOneMinusExp, 1, 0},
                  {BranchKind::Affine, -0.7, 0.4}};
  return sys;
}

}  // namespace

TEST(BuiltinTrig, Definition) {
  const SyntheticSystem sys = builtin_trig();
  EXPECT_EQ(sys.W1(0, 0), -1.7);
  EXPECT_EQ(sys.W0(2, 0), -1.6);
  EXPECT_EQ(sys.branches[1].value(0.0), -0.5);
  EXPECT_EQ(sys.branches[0].value(0.0), 2.0);
  EXPECT_EQ(sys.branches[2].value(0.0), 0.0);
}

TEST(BuiltinTrig, JacobianAndZerothAtOrigin) {
  const SyntheticSystem sys = builtin_trig();
  const MatrixXd X = MatrixXd::Zero(2, 1);
  const Tensor3d J = jacobian_tensor(sys, X);
  const MatrixXd expected = (MatrixXd(2, 2) << -13.57, 0.45, 0.25, -0.6).finished();
  EXPECT_LT((J.slice(0) - expected).norm(), 1e-12);
  const MatrixXd F = zeroth_matrix(sys, X);
  EXPECT_NEAR(F(0, 0), -2.25, 1e-12);
  EXPECT_NEAR(F(1, 0), 1.25, 1e-12);
}

TEST(BuiltinMono, EntriesInRangeAndSeeded) {
  const SyntheticSystem a = builtin_mono(3), b = builtin_mono(3), c = builtin_mono(4);
  EXPECT_LE(a.W0.cwiseAbs().maxCoeff(), 2.0);
  EXPECT_LE(a.W1.cwiseAbs().maxCoeff(), 2.0);
  EXPECT_EQ(a.W0, b.W0);
  EXPECT_EQ(a.W1, b.W1);
  EXPECT_NE(a.W0, c.W0);
  EXPECT_EQ(a.branches[0].value(1.0), 1.0 / 3.0 + 1.0);
  EXPECT_EQ(a.branches[1].value(0.0), 1.0);
  EXPECT_NEAR(a.branches[2].value(1.0), 1.0 / (1.0 - std::exp(-1.0)), 1e-15);
}

TEST(Sampling, DeterministicAndBounded) {
  const SampleSet a = sample_uniform(3, 500, -1.5, 1.5, 42), b = sample_uniform(3, 500, -1.5, 1.5, 42);
  EXPECT_EQ(a.X, b.X);
  EXPECT_GE(a.X.minCoeff(), -1.5);
  EXPECT_LE(a.X.maxCoeff(), 1.5);
  EXPECT_NE(a.X, sample_uniform(3, 500, -1.5, 1.5, 43).X);
  EXPECT_THROW(sample_uniform(1, 5, 1.0, 1.0, 0), std::invalid_argument);
}

TEST(Sampling, MeanWithinCltBound) {
  const SampleSet s = sample_uniform(1, 100000, -1.5, 1.5, 7);
  const double sigma = 3.0 / std::sqrt(12.0 * 1e5);
  EXPECT_LT(std::abs(s.X.mean()), 3 * sigma);
}

TEST(Sampling, AvoidsPole) {
  SyntheticSystem sys;
  sys.W1 = MatrixXd::Ones(1, 1);
  sys.W0 = MatrixXd::Ones(1, 1);
  sys.branches = {{BranchKind::InvOneMinusExp, 1, 0}};
  const SampleSet plain = sample_uniform(1, 2000, -1e-5, 1e-5, 1);
  const SampleSet s = sample_for_system(sys, 2000, -1e-5, 1e-5, 1);
  EXPECT_GT(s.resampled, 0);
  EXPECT_GE(s.X.cwiseAbs().minCoeff(), 1e-6);
  for (Index i = 0; i < plain.X.cols(); ++i)
    if (std::abs(plain.X(0, i)) >= 1e-6) EXPECT_EQ(plain.X(0, i), s.X(0, i));
}

TEST(Jacobian, MatchesFiniteDifferences) {
  const SyntheticSystem sys = all_kinds_system();
  SampleSet s = sample_for_system(sys, 25, -1.0, 1.0, 5);
  const Tensor3d J = jacobian_tensor(sys, s.X);
  const double h = 1e-6;
  for (Index k = 0; k < s.X.cols(); ++k) {
    MatrixXd fd(2, 3);
    for (Index j = 0; j < 3; ++j) {
      MatrixXd xp = s.X.col(k), xm = s.X.col(k);
      xp(j, 0) += h;
      xm(j, 0) -= h;
      fd.col(j) = (sys.evaluate(xp) - sys.evaluate(xm)) / (2 * h);
    }
    EXPECT_LT((J.slice(k) - fd).norm(), 1e-6 * std::max(1.0, fd.norm())) << "sample " << k;
  }
}

TEST(Jacobian, AffineBranchesGiveConstantSlices) {
  SyntheticSystem sys;
  sys.W1 = (MatrixXd(2, 2) << 1, 2, 3, 4).finished();
  sys.W0 = (MatrixXd(2, 2) << 0.5, -1, 2, 0.25).finished();
  sys.branches = {{BranchKind::Affine, 1, 0}, {BranchKind::Affine, 1, 0}};
  const Tensor3d J = jacobian_tensor(sys, sample_uniform(2, 6, -1, 1, 0).X);
  for (Index k = 0; k < 6; ++k) EXPECT_LT((J.slice(k) - sys.W1 * sys.W0).norm(), 1e-14);
}

TEST(Jacobian, AdmitsExactCpd) {
  const SyntheticSystem sys = builtin_trig();
  const MatrixXd X = sample_uniform(2, 50, -1.5, 1.5, 9).X;
  const Tensor3d J = jacobian_tensor(sys, X);
  const Tensor3d cpd = reconstruct(CpdFactors<double>{sys.W1, sys.W0.transpose(), sys.branch_derivatives(X)});
  EXPECT_LT(std::sqrt(frob_norm_sq(J - cpd)), 1e-12 * std::sqrt(frob_norm_sq(J)));
}

TEST(Zeroth, ExpandsDefinition) {
  const SyntheticSystem sys = all_kinds_system();
  const MatrixXd X = sample_for_system(sys, 10, -1, 1, 2).X;
  const MatrixXd F = zeroth_matrix(sys, X);
  for (Index s = 0; s < X.cols(); ++s) {
    const VectorXd u = sys.W0 * X.col(s);
    for (Index i = 0; i < 2; ++i) {
      double v = 0;
      for (Index k = 0; k < 7; ++k) v += sys.W1(i, k) * sys.branches[static_cast<std::size_t>(k)].value(u[k]);
      EXPECT_NEAR(F(i, s), v, 1e-13);
    }
  }
  SyntheticSystem zero = sys;
  zero.W1.setZero();
  EXPECT_TRUE(zeroth_matrix(zero, X).isZero(0));
}

TEST(Zeroth, ErrorsOnShapeAndSingularity) {
  const SyntheticSystem sys = builtin_trig();
  EXPECT_THROW(zeroth_matrix(sys, MatrixXd::Zero(3, 4)), std::invalid_argument);
  SyntheticSystem pole;
  pole.W1 = MatrixXd::Ones(1, 1);
  pole.W0 = MatrixXd::Ones(1, 1);
  pole.branches = {{BranchKind::InvOneMinusExp, 1, 0}};
  EXPECT_THROW(zeroth_matrix(pole, MatrixXd::Zero(1, 1)), std::runtime_error);
}
