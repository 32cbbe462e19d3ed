#pragma once

// Shared test data: a decoupled system whose branches are exactly splines on
// the knots the fit itself will choose, so J and F admit a zero-residual fit.

#include "cmtf/decoupling.hpp"

#include <random>

namespace cmtf::testing {

struct ExactFixture {
  Tensor3d J;
  MatrixXd F;
  MatrixXd X;
  MatrixXd W1, W0, G, R;
  CmtfConfig config;
};

inline ExactFixture exact_structure_fixture(std::uint64_t seed = 0, Index S = 80) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Index n = 3, m = 3, r = 2;

  ExactFixture fx;
  fx.config.rank = r;
  fx.config.degree = 3;
  fx.config.df = 8;
  fx.config.seed = seed + 1;
  fx.config.max_iter = 50;
  fx.config.rel_tol = 1e-14;

  fx.W1.resize(n, r);
  fx.W0.resize(r, m);
  for (Index i = 0; i < fx.W1.size(); ++i) fx.W1.data()[i] = normal(rng);
  for (Index i = 0; i < fx.W0.size(); ++i) fx.W0.data()[i] = normal(rng);
  fx.W0.rowwise().normalize();
  fx.X.resize(m, S);
  for (Index i = 0; i < fx.X.size(); ++i) fx.X.data()[i] = unif(rng);

  const MatrixXd U = fx.W0 * fx.X;
  fx.G.resize(S, r);
  fx.R.resize(S, r);
  for (Index j = 0; j < r; ++j) {
    const VectorXd u = U.row(j).transpose();
    const SplineBasisd basis = determine_knots(u, fx.config.df, fx.config.degree);
    const ProjectionMatrices maps = projection_matrices(basis, u, Representation::G);
    VectorXd c(fx.config.df + 1);
    for (Index k = 0; k < c.size(); ++k) c[k] = normal(rng);
    fx.G.col(j) = maps.derivative_map * c;
    fx.R.col(j) = maps.value_map * c;
  }
  fx.J = reconstruct(CpdFactors<double>{fx.W1, fx.W0.transpose(), fx.G});
  fx.F = fx.W1 * fx.R.transpose();
  return fx;
}

}  // namespace cmtf::testing
