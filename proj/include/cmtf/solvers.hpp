#pragma once

// Dense least-squares kernels: minimum-norm least squares through a complete
// orthogonal decomposition, row-stacked coupled least squares, and an
// active-set nonnegative least-squares solver.

#include "cmtf/tensor3.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmtf {

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

template <typename Scalar>
struct LsqResult {
  Matrix<Scalar> solution;
  Index rank = 0;
  bool rank_deficient = false;
};

/// argmin_X ||lhs X - rhs||_F; minimum-norm X when lhs is rank deficient.
template <typename DerivedA, typename DerivedB>
LsqResult<typename DerivedA::Scalar> lstsq(const Eigen::MatrixBase<DerivedA>& lhs,
                                           const Eigen::MatrixBase<DerivedB>& rhs) {
  using Scalar = typename DerivedA::Scalar;
  if (lhs.rows() != rhs.rows()) {
    throw std::invalid_argument("lstsq: row counts differ (" + std::to_string(lhs.rows()) + " vs " +
                                std::to_string(rhs.rows()) + ")");
  }
  LsqResult<Scalar> out;
  if (lhs.cols() == 0) {
    out.solution.resize(0, rhs.cols());
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(lhs.rows(), lhs.cols());
  cod.setThreshold(Scalar(kRankTolerance));
  cod.compute(lhs);
  out.rank = cod.rank();
  out.rank_deficient = out.rank < lhs.cols();
  if (out.rank == 0) {
    out.solution = Matrix<Scalar>::Zero(lhs.cols(), rhs.cols());
  } else {
    out.solution = cod.solve(rhs);
  }
  return out;
}

/// argmin_X ||lhs1 X - rhs1||^2 + lambda ||lhs2 X - rhs2||^2, solved as the
/// row-stacked system [lhs1; sqrt(lambda) lhs2] X = [rhs1; sqrt(lambda) rhs2].
template <typename Scalar>
Matrix<Scalar> stack_rows(const Eigen::Ref<const Matrix<Scalar>>& top,
                          const Eigen::Ref<const Matrix<Scalar>>& bottom, Scalar bottom_weight) {
  if (top.cols() != bottom.cols()) {
    throw std::invalid_argument("stacked_lstsq: column counts differ (" + std::to_string(top.cols()) +
                                " vs " + std::to_string(bottom.cols()) + ")");
  }
  Matrix<Scalar> out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom_weight * bottom;
  return out;
}

template <typename Scalar>
LsqResult<Scalar> stacked_lstsq(const Eigen::Ref<const Matrix<Scalar>>& lhs1,
                                const Eigen::Ref<const Matrix<Scalar>>& rhs1,
                                const Eigen::Ref<const Matrix<Scalar>>& lhs2,
                                const Eigen::Ref<const Matrix<Scalar>>& rhs2, Scalar lambda) {
  if (!(lambda >= Scalar(0))) throw std::invalid_argument("stacked_lstsq: lambda must be nonnegative");
  const Scalar w = std::sqrt(lambda);
  return lstsq(stack_rows<Scalar>(lhs1, lhs2, w), stack_rows<Scalar>(rhs1, rhs2, w));
}

template <typename Scalar>
struct NnlsResult {
  Vector<Scalar> solution;
  int iterations = 0;
  bool converged = true;
};

/// argmin_x ||lhs x - rhs||^2 subject to x >= 0.
///
/// Lawson-Hanson active set. The entering variable is the one with the
/// largest positive negative-gradient component; iterations are capped at
/// 30 * q outer steps, after which the current feasible iterate is returned
/// with converged = false.
template <typename Scalar>
NnlsResult<Scalar> nnls(const Eigen::Ref<const Matrix<Scalar>>& lhs,
                        const Eigen::Ref<const Vector<Scalar>>& rhs) {
  if (lhs.rows() != rhs.size()) {
    throw std::invalid_argument("nnls: row count " + std::to_string(lhs.rows()) +
                                " does not match rhs length " + std::to_string(rhs.size()));
  }
  const Index q = lhs.cols();
  NnlsResult<Scalar> out;
  out.solution = Vector<Scalar>::Zero(q);
  if (q == 0) return out;

  const Scalar col_scale = lhs.colwise().norm().maxCoeff();
  const Scalar scale = col_scale * std::max(rhs.norm(), col_scale);
  if (scale == Scalar(0)) return out;
  const Scalar tol = Scalar(1e-12) * scale;

  std::vector<bool> passive(static_cast<std::size_t>(q), false);
  // Coordinates whose unconstrained value came back nonpositive right after
  // entering; skipped until some other coordinate makes progress.
  std::vector<bool> blocked(static_cast<std::size_t>(q), false);
  Vector<Scalar>& x = out.solution;
  const int max_iter = 30 * static_cast<int>(q);

  auto solve_passive = [&](Vector<Scalar>& z) {
    std::vector<Index> idx;
    for (Index j = 0; j < q; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Matrix<Scalar> sub(lhs.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Index>(k)) = lhs.col(idx[k]);
    const Matrix<Scalar> zs = lstsq(sub, rhs).solution;
    z.setZero(q);
    for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zs(static_cast<Index>(k), 0);
  };

  while (true) {
    const Vector<Scalar> w = lhs.transpose() * (rhs - lhs * x);
    Index enter = -1;
    Scalar best = tol;
    for (Index j = 0; j < q; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && !blocked[static_cast<std::size_t>(j)] &&
          w[j] > best) {
        best = w[j];
        enter = j;
      }
    }
    if (enter < 0) break;
    if (out.iterations >= max_iter) {
      out.converged = false;
      break;
    }
    ++out.iterations;
    passive[static_cast<std::size_t>(enter)] = true;

    Vector<Scalar> z;
    solve_passive(z);
    if (z[enter] <= Scalar(0)) {
      passive[static_cast<std::size_t>(enter)] = false;
      blocked[static_cast<std::size_t>(enter)] = true;
      continue;
    }
    std::fill(blocked.begin(), blocked.end(), false);
    while (true) {
      bool feasible = true;
      for (Index j = 0; j < q; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z[j] <= Scalar(0)) feasible = false;
      }
      if (feasible) break;
      // Step from x toward z until the first passive coordinate hits zero.
      Scalar alpha = std::numeric_limits<Scalar>::infinity();
      Index hit = -1;
      for (Index j = 0; j < q; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z[j] <= Scalar(0)) {
          const Scalar denom = x[j] - z[j];
          const Scalar a = denom > Scalar(0) ? x[j] / denom : Scalar(0);
          if (a < alpha) {
            alpha = a;
            hit = j;
          }
        }
      }
      x += alpha * (z - x);
      x[hit] = 0;
      for (Index j = 0; j < q; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= Scalar(0)) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0;
        }
      }
      solve_passive(z);
    }
    x = z;
  }
  return out;
}

}  // namespace cmtf
