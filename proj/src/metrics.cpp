#include "cmtf/metrics.hpp"

#include "cmtf/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cmtf {

double error_tensor(const Tensor3d& J, const Tensor3d& J_hat) {
  J.check_same_dims(J_hat);
  const double denom = frob_norm_sq(J);
  if (denom == 0.0) throw std::invalid_argument("error_tensor: reference tensor has zero norm");
  return frob_norm_sq(J - J_hat) / denom;
}

VectorXd output_error(const MatrixXd& true_outputs, const MatrixXd& model_outputs) {
  if (true_outputs.rows() != model_outputs.rows() || true_outputs.cols() != model_outputs.cols()) {
    throw std::invalid_argument("output_error: shape mismatch");
  }
  if (true_outputs.cols() < 2) throw std::invalid_argument("output_error: need at least 2 samples");
  VectorXd e(true_outputs.rows());
  for (Index i = 0; i < true_outputs.rows(); ++i) {
    const auto truth = true_outputs.row(i).array();
    const double num = (truth - model_outputs.row(i).array()).square().mean();
    const double den = (truth - truth.mean()).square().mean();
    e[i] = den > 0.0 ? 100.0 * std::sqrt(num) / std::sqrt(den) : std::numeric_limits<double>::quiet_NaN();
  }
  return e;
}

double Polynomial::operator()(double u) const {
  const double v = (u - center) / half_width;
  double acc = 0.0;
  for (Index k = coeffs.size() - 1; k >= 0; --k) acc = acc * v + coeffs[k];
  return acc;
}

VectorXd Polynomial::operator()(const VectorXd& u) const {
  VectorXd out(u.size());
  for (Index s = 0; s < u.size(); ++s) out[s] = (*this)(u[s]);
  return out;
}

Polynomial poly_refit(const VectorXd& u, const VectorXd& values, int degree) {
  if (u.size() != values.size()) throw std::invalid_argument("poly_refit: length mismatch");
  std::vector<double> sorted(u.data(), u.data() + u.size());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < degree + 1) {
    throw std::invalid_argument("poly_refit: need at least " + std::to_string(degree + 1) +
                                " distinct points, got " + std::to_string(distinct));
  }
  Polynomial p;
  const double lo = sorted.front(), hi = sorted[static_cast<std::size_t>(distinct - 1)];
  p.center = 0.5 * (lo + hi);
  p.half_width = 0.5 * (hi - lo);
  MatrixXd V(u.size(), degree + 1);
  for (Index s = 0; s < u.size(); ++s) {
    const double v = (u[s] - p.center) / p.half_width;
    double pw = 1.0;
    for (int k = 0; k <= degree; ++k) {
      V(s, k) = pw;
      pw *= v;
    }
  }
  p.coeffs = lstsq(V, values).solution.col(0);
  return p;
}

MatrixXd poly_branch_outputs(const DecoupledModel& model, const MatrixXd& X, int degree) {
  const MatrixXd U = model.W0 * X;
  const MatrixXd G = branch_outputs(model, X);
  MatrixXd out(G.rows(), G.cols());
  for (Index i = 0; i < G.rows(); ++i) {
    const VectorXd u = U.row(i).transpose();
    out.row(i) = poly_refit(u, G.row(i).transpose(), degree)(u).transpose();
  }
  return out;
}

}  // namespace cmtf
