#pragma once

// Coupled matrix-tensor factorization with B-spline branch projection.
//
// Given the Jacobian tensor J (n x m x S), the zeroth-order matrix F (n x S)
// and the sample inputs (m x S), fit f(x) ~ W1 g(W0 x) where every branch
// g_i is a clamped B-spline. Each sweep performs, in order: W1 (coupled),
// W0, column normalization of W0^T, G, R, and the per-branch projection of
// G / R onto the spline structure.

#include "cmtf/bspline.hpp"
#include "cmtf/solvers.hpp"
#include "cmtf/tensor3.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cmtf {

enum class Constraint { None, MonotoneIncreasing };

struct LambdaSchedule {
  enum class Kind { Fixed, Geometric };
  Kind kind = Kind::Fixed;
  double factor = 1.0;  // Geometric: lambda_k = min(cap, lambda_0 * factor^k)
  double cap = 1.0;
};

struct CmtfConfig {
  Index rank = 3;
  int degree = 3;  // spline degree d of g (G) or of g (GPrime, whose basis has degree d-1)
  Index df = 12;
  double lambda = 0.1;
  LambdaSchedule schedule{};
  Representation representation = Representation::G;
  Constraint constraint = Constraint::None;
  int max_iter = 200;
  double rel_tol = 1e-8;
  std::uint64_t seed = 0;
  double init_scale = 1.0;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;

  /// Degree of the B-spline basis actually evaluated for each branch.
  int basis_degree() const { return representation == Representation::G ? degree : degree - 1; }

  double lambda_at(int iteration) const;
};

struct DecoupledModel {
  MatrixXd W1;  // n x r
  MatrixXd W0;  // r x m
  std::vector<SplineFunctiond> branches;
  CmtfConfig config;

  Index outputs() const { return W1.rows(); }
  Index inputs() const { return W0.cols(); }
  Index rank() const { return W0.rows(); }
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0;
  double tensor_term = 0;
  double coupling_term = 0;
  double lambda = 0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct FitState {
  MatrixXd W1, W0, G, R;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
  int rank_deficient_solves = 0;
  int fallback_count = 0;
  std::vector<std::string> warnings;
};

struct FitResult {
  DecoupledModel model;
  FitState state;
};

struct ObjectiveTerms {
  double tensor_term = 0;    // ||J - [[W1, W0^T, G]]||^2
  double coupling_term = 0;  // ||F - W1 R^T||^2
  double lambda = 0;

  double total() const { return tensor_term + lambda * coupling_term; }
};

ObjectiveTerms objective(const Tensor3d& J, const MatrixXd& F, const MatrixXd& W1, const MatrixXd& W0,
                         const MatrixXd& G, const MatrixXd& R, double lambda);

/// Runs the full alternating scheme. `diagnostics`, when non-null, receives
/// one `iter,objective,tensor_term,coupling_term` CSV line per sweep.
FitResult cmtf_bsd(const Tensor3d& J, const MatrixXd& F, const MatrixXd& samples,
                   const CmtfConfig& config, std::ostream* diagnostics = nullptr);

/// Scales column i of W0^T (row i of W0) to unit norm and column i of W1 by
/// the removed norm. Zero rows are skipped with a warning.
void normalize_columns_w0t(MatrixXd& W0, MatrixXd& W1, std::vector<std::string>* warnings = nullptr);

/// B (maps c to g' samples) and B~ (maps c to g samples), both S x (df+1).
struct ProjectionMatrices {
  MatrixXd derivative_map;  // B
  MatrixXd value_map;       // B~
};

ProjectionMatrices projection_matrices(const SplineBasisd& basis, const VectorXd& u,
                                       Representation representation);

struct ProjectionResult {
  MatrixXd G;
  MatrixXd R;
  std::vector<SplineFunctiond> branches;
  std::vector<bool> used_fallback;
  int rank_deficient_solves = 0;
  std::vector<std::string> warnings;
};

/// Projects every column pair (G_j, R_j) onto the spline structure built on
/// knots from the quantiles of x_samples row j. `degree` is the model degree d.
ProjectionResult bspline_projection(const MatrixXd& G, const MatrixXd& R, Index df, int degree,
                                    const MatrixXd& x_samples, double lambda,
                                    Representation representation, Constraint constraint);

/// Solves argmin_c ||g - B c||^2 + lambda ||r - B~ c||^2 subject to c_1.. >= 0,
/// with the constant c_0 left free.
VectorXd monotone_coefficients(const ProjectionMatrices& maps, const VectorXd& g, const VectorXd& r,
                               double lambda);

inline constexpr double kLeakySlope = -0.5;

/// Derivative L(u) = u (u >= 0), slope*u (u < 0) and its antiderivative anchored at 0.
std::pair<VectorXd, VectorXd> leaky_relu_fallback(const VectorXd& u, double slope = kLeakySlope);

/// Degree-1 derivative-representation spline reproducing the fallback
/// branch exactly on and beyond the range of u.
SplineFunctiond leaky_relu_branch(const VectorXd& u, double slope = kLeakySlope);

/// Column t is W1 [g_i((W0 x_t)_i)]_i.
MatrixXd predict(const DecoupledModel& model, const MatrixXd& X);

/// Branch outputs g_i((W0 x_t)_i), r x T.
MatrixXd branch_outputs(const DecoupledModel& model, const MatrixXd& X);

enum class MonotoneCertificate { CertifiedIncreasing, NotCertified };

/// Coefficients of g' in the basis of degree (degree-1) on the same knots
/// (without the constant term).
VectorXd derivative_coefficients(const SplineFunctiond& fn);

/// Sufficient sign test on the derivative coefficients (tolerance -1e-12).
MonotoneCertificate certify_monotone(const SplineFunctiond& fn);

/// Single sweep updates, exposed for step-wise checks.
namespace als {

struct Step {
  MatrixXd value;
  bool rank_deficient = false;
};

/// W1 = argmin ||unfold1(J) - W1 (G kr W0^T)^T||^2 + lambda ||F - W1 R^T||^2
Step update_w1(const MatrixXd& unfold1, const MatrixXd& F, const MatrixXd& W0, const MatrixXd& G,
               const MatrixXd& R, double lambda);
/// W0 = argmin ||unfold2(J) - W0^T (G kr W1)^T||^2
Step update_w0(const MatrixXd& unfold2, const MatrixXd& W1, const MatrixXd& G);
/// G = argmin ||unfold3(J) - G (W0^T kr W1)^T||^2
Step update_g(const MatrixXd& unfold3, const MatrixXd& W1, const MatrixXd& W0);
/// R = argmin ||F - W1 R^T||^2; when the minimizer is not unique, the one
/// closest to R_prev.
Step update_r(const MatrixXd& F, const MatrixXd& W1, const MatrixXd& R_prev);

}  // namespace als

std::string to_string(Representation rep);
std::string to_string(Constraint c);
std::string to_string(MonotoneCertificate c);
Representation parse_representation(const std::string& s);
Constraint parse_constraint(const std::string& s);

}  // namespace cmtf
