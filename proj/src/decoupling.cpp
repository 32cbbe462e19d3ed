#include "cmtf/decoupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace cmtf {

void CmtfConfig::validate() const {
  if (rank < 1) throw std::invalid_argument("config: rank must be positive");
  if (degree < 1) throw std::invalid_argument("config: degree must be >= 1");
  if (df <= degree) {
    throw std::invalid_argument("config: df (" + std::to_string(df) + ") must exceed degree (" +
                                std::to_string(degree) + ")");
  }
  if (!(lambda > 0)) throw std::invalid_argument("config: lambda must be positive");
  if (schedule.kind == LambdaSchedule::Kind::Geometric && (!(schedule.factor > 0) || !(schedule.cap > 0))) {
    throw std::invalid_argument("config: geometric lambda schedule needs positive factor and cap");
  }
  if (max_iter < 1) throw std::invalid_argument("config: max_iter must be positive");
  if (!(rel_tol > 0)) throw std::invalid_argument("config: rel_tol must be positive");
  if (!(init_scale > 0)) throw std::invalid_argument("config: init_scale must be positive");
  if (constraint == Constraint::MonotoneIncreasing && representation != Representation::GPrime) {
    throw std::invalid_argument(
        "config: the monotone constraint requires the derivative (gprime) representation");
  }
}

double CmtfConfig::lambda_at(int iteration) const {
  if (schedule.kind == LambdaSchedule::Kind::Fixed) return lambda;
  return std::min(schedule.cap, lambda * std::pow(schedule.factor, iteration));
}

ObjectiveTerms objective(const Tensor3d& J, const MatrixXd& F, const MatrixXd& W1, const MatrixXd& W0,
                         const MatrixXd& G, const MatrixXd& R, double lambda) {
  ObjectiveTerms out;
  out.lambda = lambda;
  const Tensor3d approx = reconstruct(CpdFactors<double>{W1, W0.transpose(), G});
  out.tensor_term = frob_norm_sq(J - approx);
  out.coupling_term = (F - W1 * R.transpose()).squaredNorm();
  return out;
}

namespace als {

Step update_w1(const MatrixXd& unfold1, const MatrixXd& F, const MatrixXd& W0, const MatrixXd& G,
               const MatrixXd& R, double lambda) {
  // unfold1 ~ W1 K^T and F ~ W1 R^T, solved for W1^T.
  const MatrixXd K = khatri_rao(G, W0.transpose());
  const auto res = stacked_lstsq<double>(K, unfold1.transpose(), R, F.transpose(), lambda);
  return {res.solution.transpose(), res.rank_deficient};
}

Step update_w0(const MatrixXd& unfold2, const MatrixXd& W1, const MatrixXd& G) {
  const MatrixXd K = khatri_rao(G, W1);
  const auto res = lstsq(K, unfold2.transpose());
  return {res.solution, res.rank_deficient};
}

Step update_g(const MatrixXd& unfold3, const MatrixXd& W1, const MatrixXd& W0) {
  const MatrixXd K = khatri_rao(W0.transpose(), W1);
  const auto res = lstsq(K, unfold3.transpose());
  return {res.solution.transpose(), res.rank_deficient};
}

Step update_r(const MatrixXd& F, const MatrixXd& W1, const MatrixXd& R_prev) {
  // Among all minimizers (W1 is wide whenever r > n) take the one nearest
  // the previous iterate: R_prev plus the minimum-norm correction.
  const auto res = lstsq(W1, F - W1 * R_prev.transpose());
  return {R_prev + res.solution.transpose(), res.rank_deficient};
}

}  // namespace als

void normalize_columns_w0t(MatrixXd& W0, MatrixXd& W1, std::vector<std::string>* warnings) {
  if (W0.rows() != W1.cols()) {
    throw std::invalid_argument("normalize_columns_w0t: W0 rows must match W1 columns");
  }
  for (Index i = 0; i < W0.rows(); ++i) {
    const double beta = W0.row(i).norm();
    if (beta == 0.0 || !std::isfinite(beta)) {
      if (warnings) warnings->push_back("normalize: row " + std::to_string(i) + " of W0 has zero norm, skipped");
      continue;
    }
    W0.row(i) /= beta;
    W1.col(i) *= beta;
  }
}

ProjectionMatrices projection_matrices(const SplineBasisd& basis, const VectorXd& u,
                                       Representation representation) {
  ProjectionMatrices out;
  if (representation == Representation::G) {
    out.value_map = augment(design_matrix(basis, u), AugmentKind::Ones);
    out.derivative_map = augment(derivative_design_matrix(basis, u), AugmentKind::Zeros);
  } else {
    out.derivative_map = augment(design_matrix(basis, u), AugmentKind::Zeros);
    out.value_map = augment(integral_design_matrix(basis, u), AugmentKind::Ones);
  }
  return out;
}

VectorXd monotone_coefficients(const ProjectionMatrices& maps, const VectorXd& g, const VectorXd& r,
                               double lambda) {
  const double w = std::sqrt(lambda);
  const MatrixXd A = stack_rows<double>(maps.derivative_map, maps.value_map, w);
  VectorXd b(g.size() + r.size());
  b << g, w * r;

  // Eliminate the free constant: for fixed spline weights the optimal c_0 is
  // a0^T (b - A1 c) / ||a0||^2, leaving NNLS on the projected system.
  const VectorXd a0 = A.col(0);
  const MatrixXd A1 = A.rightCols(A.cols() - 1);
  const double a0_sq = a0.squaredNorm();
  VectorXd c(A.cols());
  if (a0_sq == 0.0) {
    c[0] = 0.0;
    c.tail(A1.cols()) = nnls<double>(A1, b).solution;
    return c;
  }
  const MatrixXd P_A1 = A1 - a0 * (a0.transpose() * A1) / a0_sq;
  const VectorXd P_b = b - a0 * (a0.dot(b) / a0_sq);
  const VectorXd spline = nnls<double>(P_A1, P_b).solution;
  c[0] = a0.dot(b - A1 * spline) / a0_sq;
  c.tail(spline.size()) = spline;
  return c;
}

std::pair<VectorXd, VectorXd> leaky_relu_fallback(const VectorXd& u, double slope) {
  VectorXd d(u.size()), v(u.size());
  for (Index s = 0; s < u.size(); ++s) {
    const double x = u[s];
    const double k = x >= 0.0 ? 1.0 : slope;
    d[s] = k * x;
    v[s] = k * x * x / 2.0;
  }
  return {d, v};
}

SplineFunctiond leaky_relu_branch(const VectorXd& u, double slope) {
  // The kink at 0 is always a knot, so the domain is widened to contain it
  // when every sample lies on one side.
  const double width = std::max(u.maxCoeff() - u.minCoeff(), 1.0);
  const double lo = std::min(u.minCoeff(), -width);
  const double hi = std::max(u.maxCoeff(), width);
  auto deriv = [slope](double x) { return x >= 0.0 ? x : slope * x; };
  auto anti = [slope](double x) { return (x >= 0.0 ? 1.0 : slope) * x * x / 2.0; };
  VectorXd knots(5);
  knots << lo, lo, 0.0, hi, hi;
  VectorXd coeffs(4);
  coeffs << anti(lo), deriv(lo), 0.0, deriv(hi);
  return SplineFunctiond(SplineBasisd(1, knots), coeffs, Representation::GPrime);
}

ProjectionResult bspline_projection(const MatrixXd& G, const MatrixXd& R, Index df, int degree,
                                    const MatrixXd& x_samples, double lambda,
                                    Representation representation, Constraint constraint) {
  const Index r = x_samples.rows();
  const Index S = x_samples.cols();
  if (G.rows() != S || R.rows() != S || G.cols() != r || R.cols() != r) {
    throw std::invalid_argument("bspline_projection: G and R must be S x r matching x_samples (r x S)");
  }
  if (df <= degree) throw std::invalid_argument("bspline_projection: df must exceed degree");
  const int basis_degree = representation == Representation::G ? degree : degree - 1;

  ProjectionResult out;
  out.G.resize(S, r);
  out.R.resize(S, r);
  out.used_fallback.assign(static_cast<std::size_t>(r), false);
  for (Index j = 0; j < r; ++j) {
    const VectorXd u = x_samples.row(j).transpose();
    SplineBasisd basis = determine_knots(u, df, basis_degree);
    if (basis.has_coincident_interior_knots()) {
      out.warnings.push_back("projection: branch " + std::to_string(j) +
                             " has coincident interior knots (reduced continuity)");
    }
    const ProjectionMatrices maps = projection_matrices(basis, u, representation);

    VectorXd c;
    if (constraint == Constraint::MonotoneIncreasing) {
      c = monotone_coefficients(maps, G.col(j), R.col(j), lambda);
      if ((c.tail(c.size() - 1).array() == 0.0).all()) {
        auto [gcol, rcol] = leaky_relu_fallback(u);
        out.G.col(j) = gcol;
        out.R.col(j) = rcol;
        out.branches.push_back(leaky_relu_branch(u));
        out.used_fallback[static_cast<std::size_t>(j)] = true;
        continue;
      }
    } else {
      const auto res = stacked_lstsq<double>(maps.derivative_map, G.col(j), maps.value_map, R.col(j), lambda);
      out.rank_deficient_solves += res.rank_deficient;
      c = res.solution.col(0);
    }
    out.G.col(j) = maps.derivative_map * c;
    out.R.col(j) = maps.value_map * c;
    out.branches.emplace_back(std::move(basis), std::move(c), representation);
  }
  return out;
}

namespace {

void check_finite(const MatrixXd& m, const char* what, int iteration) {
  if (!m.allFinite()) {
    throw std::runtime_error(std::string("cmtf_bsd: non-finite values in ") + what + " at iteration " +
                             std::to_string(iteration));
  }
}

MatrixXd standard_normal(Index rows, Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  MatrixXd m(rows, cols);
  // Column-major fill order, fixed so seeds reproduce.
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = scale * dist(rng);
  return m;
}

}  // namespace

FitResult cmtf_bsd(const Tensor3d& J, const MatrixXd& F, const MatrixXd& samples, const CmtfConfig& config,
                   std::ostream* diagnostics) {
  config.validate();
  const Index n = J.rows(), m = J.cols(), S = J.slices();
  if (F.rows() != n || F.cols() != S) {
    throw std::invalid_argument("cmtf_bsd: F must be " + std::to_string(n) + " x " + std::to_string(S) +
                                ", got " + std::to_string(F.rows()) + " x " + std::to_string(F.cols()));
  }
  if (samples.rows() != m || samples.cols() != S) {
    throw std::invalid_argument("cmtf_bsd: samples must be " + std::to_string(m) + " x " +
                                std::to_string(S) + ", got " + std::to_string(samples.rows()) + " x " +
                                std::to_string(samples.cols()));
  }
  if (S < config.df + config.degree + 2) {
    throw std::invalid_argument("cmtf_bsd: need at least df + degree + 2 = " +
                                std::to_string(config.df + config.degree + 2) + " samples, got " +
                                std::to_string(S));
  }
  if (!J.data().allFinite() || !F.allFinite() || !samples.allFinite()) {
    throw std::invalid_argument("cmtf_bsd: non-finite input data");
  }

  const Index r = config.rank;
  const MatrixXd unf1 = unfold(J, 1);
  const MatrixXd unf2 = unfold(J, 2);
  const MatrixXd unf3 = unfold(J, 3);

  FitState st;
  std::mt19937_64 rng(config.seed);
  st.W0 = standard_normal(r, m, config.init_scale, rng);
  st.G = standard_normal(S, r, 1.0, rng);
  st.R = standard_normal(S, r, 1.0, rng);
  st.W1 = MatrixXd::Zero(n, r);

  std::vector<SplineFunctiond> branches;
  const double data_scale = frob_norm_sq(J) + config.lambda * F.squaredNorm();
  if (diagnostics) *diagnostics << "iter,objective,tensor_term,coupling_term\n";

  for (int it = 0; it < config.max_iter; ++it) {
    const double lambda = config.lambda_at(it);

    auto w1 = als::update_w1(unf1, F, st.W0, st.G, st.R, lambda);
    st.W1 = std::move(w1.value);
    auto w0 = als::update_w0(unf2, st.W1, st.G);
    st.W0 = std::move(w0.value);
    normalize_columns_w0t(st.W0, st.W1, &st.warnings);
    auto g = als::update_g(unf3, st.W1, st.W0);
    st.G = std::move(g.value);
    auto rr = als::update_r(F, st.W1, st.R);
    st.R = std::move(rr.value);
    st.rank_deficient_solves += w1.rank_deficient + w0.rank_deficient + g.rank_deficient + rr.rank_deficient;
    check_finite(st.W1, "W1", it);
    check_finite(st.W0, "W0", it);
    check_finite(st.G, "G", it);
    check_finite(st.R, "R", it);

    const MatrixXd x_samples = st.W0 * samples;
    ProjectionResult proj;
    try {
      proj = bspline_projection(st.G, st.R, config.df, config.degree, x_samples, lambda,
                                config.representation, config.constraint);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("cmtf_bsd: projection failed at iteration " + std::to_string(it) + ": " +
                               e.what());
    }
    st.G = std::move(proj.G);
    st.R = std::move(proj.R);
    branches = std::move(proj.branches);
    st.rank_deficient_solves += proj.rank_deficient_solves;
    for (bool fb : proj.used_fallback) st.fallback_count += fb;
    for (auto& w : proj.warnings) st.warnings.push_back(std::move(w));
    check_finite(st.G, "projected G", it);
    check_finite(st.R, "projected R", it);

    const ObjectiveTerms obj = objective(J, F, st.W1, st.W0, st.G, st.R, lambda);
    const IterationRecord rec{it + 1, obj.total(), obj.tensor_term, obj.coupling_term, lambda};
    if (!std::isfinite(rec.objective)) {
      throw std::runtime_error("cmtf_bsd: non-finite objective at iteration " + std::to_string(it));
    }
    st.history.push_back(rec);
    st.iterations = it + 1;
    if (diagnostics) {
      *diagnostics << rec.iteration << ',' << rec.objective << ',' << rec.tensor_term << ','
                   << rec.coupling_term << '\n';
    }

    if (rec.objective <= 1e-28 * data_scale) {
      st.converged = true;
      break;
    }
    if (st.history.size() >= 2) {
      const double prev = st.history[st.history.size() - 2].objective;
      if (std::abs(prev - rec.objective) < config.rel_tol * prev) {
        st.converged = true;
        break;
      }
    }
  }
  if (st.rank_deficient_solves > 0) {
    st.warnings.push_back(std::to_string(st.rank_deficient_solves) +
                          " least-squares solves were rank deficient (minimum-norm solutions used)");
  }

  FitResult result;
  result.model.W1 = st.W1;
  result.model.W0 = st.W0;
  result.model.branches = std::move(branches);
  result.model.config = config;
  result.state = std::move(st);
  return result;
}

MatrixXd branch_outputs(const DecoupledModel& model, const MatrixXd& X) {
  if (X.rows() != model.inputs()) {
    throw std::invalid_argument("predict: inputs have " + std::to_string(X.rows()) + " rows, model expects " +
                                std::to_string(model.inputs()));
  }
  const MatrixXd U = model.W0 * X;
  MatrixXd out(U.rows(), U.cols());
  for (Index i = 0; i < U.rows(); ++i) {
    out.row(i) = model.branches[static_cast<std::size_t>(i)].eval(U.row(i).transpose()).transpose();
  }
  return out;
}

MatrixXd predict(const DecoupledModel& model, const MatrixXd& X) {
  return model.W1 * branch_outputs(model, X);
}

VectorXd derivative_coefficients(const SplineFunctiond& fn) {
  const Index df = fn.basis.df();
  const auto spline = fn.coeffs.tail(df);
  if (fn.representation == Representation::GPrime) return spline;
  const int p = fn.basis.degree();
  if (p == 0) return VectorXd::Zero(0);
  const auto& t = fn.basis.knots();
  VectorXd d(df - 1);
  for (Index k = 0; k + 1 < df; ++k) {
    const double span = t[k + p + 1] - t[k + 1];
    d[k] = span > 0.0 ? p * (spline[k + 1] - spline[k]) / span : 0.0;
  }
  return d;
}

MonotoneCertificate certify_monotone(const SplineFunctiond& fn) {
  const VectorXd d = derivative_coefficients(fn);
  return (d.array() >= -1e-12).all() ? MonotoneCertificate::CertifiedIncreasing
                                     : MonotoneCertificate::NotCertified;
}

std::string to_string(Representation rep) { return rep == Representation::G ? "g" : "gprime"; }

std::string to_string(Constraint c) { return c == Constraint::None ? "none" : "monotone"; }

std::string to_string(MonotoneCertificate c) {
  return c == MonotoneCertificate::CertifiedIncreasing ? "CERTIFIED_INCREASING" : "NOT_CERTIFIED";
}

Representation parse_representation(const std::string& s) {
  if (s == "g") return Representation::G;
  if (s == "gprime") return Representation::GPrime;
  throw std::invalid_argument("unknown representation '" + s + "' (expected g or gprime)");
}

Constraint parse_constraint(const std::string& s) {
  if (s == "none") return Constraint::None;
  if (s == "monotone") return Constraint::MonotoneIncreasing;
  throw std::invalid_argument("unknown constraint '" + s + "' (expected none or monotone)");
}

}  // namespace cmtf
