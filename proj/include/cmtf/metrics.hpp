#pragma once

// Fit-quality metrics and the degree-10 polynomial re-interpolation of
// recovered branch shapes.

#include "cmtf/decoupling.hpp"
#include "cmtf/tensor3.hpp"

namespace cmtf {

/// ||J - J_hat||^2 / ||J||^2. Throws if ||J|| = 0.
double error_tensor(const Tensor3d& J, const Tensor3d& J_hat);

/// Per-output relative RMS error in percent:
///   e_i = 100 * sqrt(mean_s (f_i - f_hat_i)^2) / sqrt(mean_s (f_i - mean(f_i))^2).
/// Outputs whose truth is constant have no defined error and yield NaN.
VectorXd output_error(const MatrixXd& true_outputs, const MatrixXd& model_outputs);

/// Least-squares polynomial in the scaled variable v = (u - center) / half_width,
/// coefficients ordered by increasing power.
struct Polynomial {
  VectorXd coeffs;
  double center = 0.0;
  double half_width = 1.0;

  double operator()(double u) const;
  VectorXd operator()(const VectorXd& u) const;
};

/// Throws if u has fewer than degree + 1 distinct values.
Polynomial poly_refit(const VectorXd& u, const VectorXd& values, int degree = 10);

/// Branch outputs (r x S) after replacing every branch by its polynomial refit
/// on the training projections W0 X.
MatrixXd poly_branch_outputs(const DecoupledModel& model, const MatrixXd& X, int degree = 10);

}  // namespace cmtf
