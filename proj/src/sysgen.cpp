#include "cmtf/sysgen.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cmtf {

double Branch::value(double u) const {
  switch (kind) {
    case BranchKind::SinPlus: return std::sin(a * u) + b;
    case BranchKind::CosPlus: return std::cos(a * u) + b;
    case BranchKind::SinPlusHalf: return std::sin(a * u) + u / 2.0;
    case BranchKind::CubicPlusLinear: return u * u * u / 3.0 + u;
    case BranchKind::Exp: return std::exp(u);
    case BranchKind::InvOneMinusExp: return 1.0 / (1.0 - std::exp(-u));
    case BranchKind::Affine: return a * u + b;
  }
  return 0.0;
}

double Branch::derivative(double u) const {
  switch (kind) {
    case BranchKind::SinPlus: return a * std::cos(a * u);
    case BranchKind::CosPlus: return -a * std::sin(a * u);
    case BranchKind::SinPlusHalf: return a * std::cos(a * u) + 0.5;
    case BranchKind::CubicPlusLinear: return u * u + 1.0;
    case BranchKind::Exp: return std::exp(u);
    case BranchKind::InvOneMinusExp: {
      const double e = std::exp(-u);
      const double d = 1.0 - e;
      return -e / (d * d);
    }
    case BranchKind::Affine: return a;
  }
  return 0.0;
}

std::string Branch::describe() const {
  std::ostringstream os;
  switch (kind) {
    case BranchKind::SinPlus: os << "sin(" << a << "u)+" << b; break;
    case BranchKind::CosPlus: os << "cos(" << a << "u)+" << b; break;
    case BranchKind::SinPlusHalf: os << "sin(" << a << "u)+u/2"; break;
    case BranchKind::CubicPlusLinear: os << "u^3/3+u"; break;
    case BranchKind::Exp: os << "exp(u)"; break;
    case BranchKind::InvOneMinusExp: os << "1/(1-exp(-u))"; break;
    case BranchKind::Affine: os << a << "u+" << b; break;
  }
  return os.str();
}

namespace {

template <typename Fn>
MatrixXd map_branches(const SyntheticSystem& sys, const MatrixXd& X, Fn&& fn) {
  if (X.rows() != sys.inputs()) {
    throw std::invalid_argument("system expects " + std::to_string(sys.inputs()) + " inputs, samples have " +
                                std::to_string(X.rows()) + " rows");
  }
  const MatrixXd U = sys.W0 * X;
  MatrixXd out(X.cols(), sys.rank());
  for (Index s = 0; s < X.cols(); ++s) {
    for (Index i = 0; i < sys.rank(); ++i) {
      const double v = fn(sys.branches[static_cast<std::size_t>(i)], U(i, s));
      if (!std::isfinite(v)) {
        throw std::runtime_error("non-finite branch " + std::to_string(i) + " evaluation at sample " +
                                 std::to_string(s));
      }
      out(s, i) = v;
    }
  }
  return out;
}

}  // namespace

MatrixXd SyntheticSystem::branch_values(const MatrixXd& X) const {
  return map_branches(*this, X, [](const Branch& b, double u) { return b.value(u); });
}

MatrixXd SyntheticSystem::branch_derivatives(const MatrixXd& X) const {
  return map_branches(*this, X, [](const Branch& b, double u) { return b.derivative(u); });
}

MatrixXd SyntheticSystem::evaluate(const MatrixXd& X) const { return W1 * branch_values(X).transpose(); }

SampleSet sample_uniform(Index m, Index S, double lo, double hi, std::uint64_t seed) {
  if (!(lo < hi)) throw std::invalid_argument("sample_uniform: need lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  SampleSet out;
  out.X.resize(m, S);
  out.lo = lo;
  out.hi = hi;
  out.seed = seed;
  for (Index s = 0; s < S; ++s)
    for (Index i = 0; i < m; ++i) out.X(i, s) = dist(rng);
  return out;
}

SampleSet sample_for_system(const SyntheticSystem& sys, Index S, double lo, double hi, std::uint64_t seed) {
  SampleSet out = sample_uniform(sys.inputs(), S, lo, hi, seed);
  // Redraws continue on a generator derived from the seed so the first pass
  // matches sample_uniform exactly.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(lo, hi);
  auto near_pole = [&](const VectorXd& x) {
    const VectorXd u = sys.W0 * x;
    for (Index i = 0; i < sys.rank(); ++i) {
      if (sys.branches[static_cast<std::size_t>(i)].kind == BranchKind::InvOneMinusExp && std::abs(u[i]) < 1e-6) {
        return true;
      }
    }
    return false;
  };
  for (Index s = 0; s < S; ++s) {
    int guard = 0;
    while (near_pole(out.X.col(s))) {
      if (++guard > 1000) throw std::runtime_error("sample_for_system: cannot avoid branch singularity");
      for (Index i = 0; i < out.X.rows(); ++i) out.X(i, s) = dist(rng);
      ++out.resampled;
    }
  }
  return out;
}

Tensor3d jacobian_tensor(const SyntheticSystem& sys, const MatrixXd& X) {
  const MatrixXd D = sys.branch_derivatives(X);
  Tensor3d J(sys.outputs(), sys.inputs(), X.cols());
  for (Index s = 0; s < X.cols(); ++s) {
    J.slice(s).noalias() = sys.W1 * D.row(s).asDiagonal() * sys.W0;
  }
  return J;
}

MatrixXd zeroth_matrix(const SyntheticSystem& sys, const MatrixXd& X) { return sys.evaluate(X); }

SyntheticSystem builtin_trig() {
  SyntheticSystem sys;
  sys.W1.resize(2, 3);
  sys.W1 << -1.7, -2.3, 2.5,
             0.5, -0.5, 0.2;
  sys.W0.resize(3, 2);
  sys.W0 << 2.1, -1.0,
            0.4, -1.8,
           -1.6, -0.2;
  sys.branches = {
      {BranchKind::SinPlus, 1.0, 2.0},
      {BranchKind::CosPlus, 2.0, -1.5},
      {BranchKind::SinPlusHalf, 2.0, 0.0},
  };
  return sys;
}

SyntheticSystem builtin_mono(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  SyntheticSystem sys;
  sys.W0.resize(3, 3);
  sys.W1.resize(3, 3);
  for (Index c = 0; c < 3; ++c)
    for (Index r = 0; r < 3; ++r) sys.W0(r, c) = dist(rng);
  for (Index c = 0; c < 3; ++c)
    for (Index r = 0; r < 3; ++r) sys.W1(r, c) = dist(rng);
  sys.branches = {
      {BranchKind::CubicPlusLinear, 1.0, 0.0},
      {BranchKind::Exp, 1.0, 0.0},
      {BranchKind::InvOneMinusExp, 1.0, 0.0},
  };
  return sys;
}

}  // namespace cmtf
