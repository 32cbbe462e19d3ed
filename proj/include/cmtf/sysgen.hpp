#pragma once

// Synthetic decoupled systems f(x) = W1 g(W0 x) with analytic branches, input
// sampling, and exact Jacobian-tensor / zeroth-order matrix construction.

#include "cmtf/tensor3.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cmtf {

enum class BranchKind {
  SinPlus,          // sin(a u) + b
  CosPlus,          // cos(a u) + b
  SinPlusHalf,      // sin(a u) + u/2
  CubicPlusLinear,  // u^3/3 + u
  Exp,              // exp(u)
  InvOneMinusExp,   // 1 / (1 - exp(-u)), singular at 0
  Affine,           // a u + b
};

struct Branch {
  BranchKind kind = BranchKind::Affine;
  double a = 1.0;
  double b = 0.0;

  double value(double u) const;
  double derivative(double u) const;
  std::string describe() const;
};

struct SyntheticSystem {
  MatrixXd W1;  // n x r
  MatrixXd W0;  // r x m
  std::vector<Branch> branches;

  Index outputs() const { return W1.rows(); }
  Index inputs() const { return W0.cols(); }
  Index rank() const { return W0.rows(); }

  /// g_i(u_i) and g'_i(u_i) at U = W0 X, each S x r.
  MatrixXd branch_values(const MatrixXd& X) const;
  MatrixXd branch_derivatives(const MatrixXd& X) const;
  MatrixXd evaluate(const MatrixXd& X) const;
};

struct SampleSet {
  MatrixXd X;  // m x S
  double lo = -1.5;
  double hi = 1.5;
  std::uint64_t seed = 0;
  int resampled = 0;  // columns redrawn to avoid branch singularities
};

/// i.i.d. U(lo, hi) entries from std::mt19937_64(seed), filled column by column.
SampleSet sample_uniform(Index m, Index S, double lo, double hi, std::uint64_t seed);

/// As sample_uniform, but redraws any column whose projection lands within
/// 1e-6 of the pole of an InvOneMinusExp branch.
SampleSet sample_for_system(const SyntheticSystem& sys, Index S, double lo, double hi, std::uint64_t seed);

/// Frontal slice s = W1 diag(g'(W0 x_s)) W0.
Tensor3d jacobian_tensor(const SyntheticSystem& sys, const MatrixXd& X);

/// Column s = W1 g(W0 x_s).
MatrixXd zeroth_matrix(const SyntheticSystem& sys, const MatrixXd& X);

SyntheticSystem builtin_trig();

/// Three monotone branches (u^3/3 + u, exp(u), 1/(1 - exp(-u))) with W0, W1
/// drawn i.i.d. from U(-2, 2) by std::mt19937_64(seed).
SyntheticSystem builtin_mono(std::uint64_t seed);

}  // namespace cmtf
