#pragma once

// Clamped B-spline bases: quantile knot placement, value / derivative /
// antiderivative design matrices and spline evaluation.
//
// Outside [domain_min, domain_max] every routine evaluates the polynomial
// piece of the nearest boundary span, so values, derivatives and integrals
// stay mutually consistent under extrapolation.

#include "cmtf/tensor3.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmtf {

template <typename Scalar>
class SplineBasis {
public:
  SplineBasis() = default;

  SplineBasis(int degree, Vector<Scalar> knots) : degree_(degree), knots_(std::move(knots)) {
    if (degree_ < 0) throw std::invalid_argument("SplineBasis: negative degree");
    const Index p = degree_;
    const Index nk = knots_.size();
    if (nk < 2 * (p + 1)) {
      throw std::invalid_argument("SplineBasis: need at least 2*(degree+1) knots, got " +
                                  std::to_string(nk));
    }
    for (Index i = 1; i < nk; ++i) {
      if (!(knots_[i] >= knots_[i - 1])) throw std::invalid_argument("SplineBasis: knots must be nondecreasing");
    }
    for (Index i = 1; i <= p; ++i) {
      if (knots_[i] != knots_[0] || knots_[nk - 1 - i] != knots_[nk - 1]) {
        throw std::invalid_argument("SplineBasis: boundary knots must have multiplicity degree+1");
      }
    }
    if (!(knots_[nk - 1] > knots_[0])) throw std::invalid_argument("SplineBasis: empty domain");
  }

  int degree() const { return degree_; }
  Index df() const { return knots_.size() - degree_ - 1; }
  const Vector<Scalar>& knots() const { return knots_; }
  Scalar domain_min() const { return knots_[0]; }
  Scalar domain_max() const { return knots_[knots_.size() - 1]; }

  /// True if two interior knots coincide (continuity at that knot drops).
  bool has_coincident_interior_knots() const {
    for (Index i = degree_ + 1; i < df(); ++i) {
      if (knots_[i] == knots_[i + 1] || knots_[i] == knots_[i - 1]) return true;
    }
    return false;
  }

  /// Index i of the knot span [t_i, t_{i+1}) used to evaluate at u. Values
  /// beyond the domain map to the first / last nonempty span.
  Index find_span(Scalar u) const {
    const Index p = degree_;
    const Index last = df() - 1;
    if (u < knots_[p + 1] || !(u >= knots_[p + 1])) {
      Index i = p;
      while (i < last && knots_[i] == knots_[i + 1]) ++i;
      return i;
    }
    if (u >= knots_[last]) {
      Index i = last;
      while (i > p && knots_[i] == knots_[i + 1]) --i;
      return i;
    }
    const auto* begin = knots_.data() + p + 1;
    const auto* end = knots_.data() + last + 1;
    return static_cast<Index>(std::upper_bound(begin, end, u) - knots_.data()) - 1;
  }

  /// Values B_{span-q..span, q}(u) on this knot vector for q <= degree.
  Vector<Scalar> basis_functions(Index span, Scalar u, int q) const {
    return span_basis(knots_, span, u, q);
  }

  /// Triangular Cox-de Boor table for the q+1 functions nonzero on `span`.
  static Vector<Scalar> span_basis(const Vector<Scalar>& t, Index span, Scalar u, int q) {
    Vector<Scalar> n(q + 1), left(q + 1), right(q + 1);
    n[0] = Scalar(1);
    for (int j = 1; j <= q; ++j) {
      left[j] = u - t[span + 1 - j];
      right[j] = t[span + j] - u;
      Scalar saved = 0;
      for (int r = 0; r < j; ++r) {
        const Scalar denom = right[r + 1] + left[j - r];
        const Scalar tmp = denom != Scalar(0) ? n[r] / denom : Scalar(0);
        n[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      n[j] = saved;
    }
    return n;
  }

  friend bool operator==(const SplineBasis& a, const SplineBasis& b) {
    return a.degree_ == b.degree_ && a.knots_.size() == b.knots_.size() && a.knots_ == b.knots_;
  }

private:
  int degree_ = 0;
  Vector<Scalar> knots_;
};

using SplineBasisd = SplineBasis<double>;

enum class Representation { G, GPrime };
enum class AugmentKind { Zeros, Ones };

/// Empirical quantile with linear interpolation between order statistics:
/// h = (N-1) q, Q(q) = x_(floor h) + (h - floor h) (x_(floor h + 1) - x_(floor h)).
template <typename Scalar>
Scalar quantile_sorted(const std::vector<Scalar>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const Scalar frac = static_cast<Scalar>(h - static_cast<double>(lo));
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Clamped knot vector with df - degree - 1 interior knots at the
/// i/(K+1) quantiles of x and boundary knots at min(x), max(x).
template <typename Derived>
SplineBasis<typename Derived::Scalar> determine_knots(const Eigen::DenseBase<Derived>& x, Index df,
                                                      int degree) {
  using Scalar = typename Derived::Scalar;
  if (degree < 0) throw std::invalid_argument("determine_knots: negative degree");
  if (df <= degree) {
    throw std::invalid_argument("determine_knots: df (" + std::to_string(df) +
                                ") must exceed degree (" + std::to_string(degree) + ")");
  }
  std::vector<Scalar> sorted;
  sorted.reserve(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar v = x.derived().coeff(i);
    if (!std::isfinite(static_cast<double>(v))) {
      throw std::invalid_argument("determine_knots: non-finite sample");
    }
    sorted.push_back(v);
  }
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty() || sorted.front() == sorted.back()) {
    throw std::invalid_argument("determine_knots: degenerate samples (min == max)");
  }
  Index n_distinct = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) n_distinct += sorted[i] != sorted[i - 1];
  if (n_distinct < df + 1) {
    throw std::invalid_argument("determine_knots: need at least df+1 = " + std::to_string(df + 1) +
                                " distinct samples, got " + std::to_string(n_distinct));
  }

  const Index interior = df - degree - 1;
  Vector<Scalar> knots(df + degree + 1);
  for (int i = 0; i <= degree; ++i) {
    knots[i] = sorted.front();
    knots[knots.size() - 1 - i] = sorted.back();
  }
  for (Index i = 1; i <= interior; ++i) {
    knots[degree + i] =
        quantile_sorted(sorted, static_cast<double>(i) / static_cast<double>(interior + 1));
  }
  return SplineBasis<Scalar>(degree, std::move(knots));
}

/// Entry (s, j) = B_{j,degree}(u_s).
template <typename Scalar, typename Derived>
Matrix<Scalar> design_matrix(const SplineBasis<Scalar>& basis, const Eigen::DenseBase<Derived>& u) {
  const int p = basis.degree();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(u.size(), basis.df());
  for (Index s = 0; s < u.size(); ++s) {
    const Scalar x = u.derived().coeff(s);
    const Index span = basis.find_span(x);
    out.row(s).segment(span - p, p + 1) = basis.basis_functions(span, x, p).transpose();
  }
  return out;
}

/// Entry (s, j) = d/du B_{j,degree}(u_s), through the degree-1 lower basis on the
/// same knots. Zero-length knot intervals contribute zero.
template <typename Scalar, typename Derived>
Matrix<Scalar> derivative_design_matrix(const SplineBasis<Scalar>& basis,
                                        const Eigen::DenseBase<Derived>& u) {
  const int p = basis.degree();
  if (p < 1) throw std::invalid_argument("derivative_design_matrix: degree 0 basis has no derivative");
  const auto& t = basis.knots();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(u.size(), basis.df());
  for (Index s = 0; s < u.size(); ++s) {
    const Scalar x = u.derived().coeff(s);
    const Index span = basis.find_span(x);
    // lower[k] = B_{span-p+1+k, p-1}(x)
    const Vector<Scalar> lower = basis.basis_functions(span, x, p - 1);
    auto lower_at = [&](Index j) -> Scalar {
      const Index k = j - (span - p + 1);
      return (k >= 0 && k < p) ? lower[k] : Scalar(0);
    };
    for (Index j = span - p; j <= span; ++j) {
      const Scalar d1 = t[j + p] - t[j];
      const Scalar d2 = t[j + p + 1] - t[j + 1];
      Scalar v = 0;
      if (d1 != Scalar(0)) v += lower_at(j) / d1;
      if (d2 != Scalar(0)) v -= lower_at(j + 1) / d2;
      out(s, j) = Scalar(p) * v;
    }
  }
  return out;
}

/// Entry (s, j) = integral of B_{j,degree} from domain_min to u_s, via
/// int B_{j,p} = (t_{j+p+1} - t_j)/(p+1) * sum_{k>j} B_{k,p+1} on the knot
/// vector with one extra knot appended at each end.
template <typename Scalar, typename Derived>
Matrix<Scalar> integral_design_matrix(const SplineBasis<Scalar>& basis,
                                      const Eigen::DenseBase<Derived>& u) {
  const int p = basis.degree();
  const Index df = basis.df();
  const auto& t = basis.knots();
  Vector<Scalar> ext_knots(t.size() + 2);
  ext_knots << t[0], t, t[t.size() - 1];
  const SplineBasis<Scalar> up(p + 1, ext_knots);

  Matrix<Scalar> out = Matrix<Scalar>::Zero(u.size(), df);
  for (Index s = 0; s < u.size(); ++s) {
    const Scalar x = u.derived().coeff(s);
    const Index span = up.find_span(x);
    // vals[k] = B^{ext}_{span-p-1+k, p+1}(x)
    const Vector<Scalar> vals = up.basis_functions(span, x, p + 1);
    const Index first = span - p - 1;
    // tail[k] = sum of vals[k..]
    Vector<Scalar> tail(p + 3);
    tail[p + 2] = 0;
    for (Index k = p + 1; k >= 0; --k) tail[k] = tail[k + 1] + vals[k];
    for (Index j = 0; j < df; ++j) {
      // extended index j+1 corresponds to original B_{j,p+1} tail start
      const Index k0 = j + 1 - first;
      Scalar sum;
      if (k0 <= 0) {
        sum = tail[0];
      } else if (k0 > p + 1) {
        continue;
      } else {
        sum = tail[k0];
      }
      out(s, j) = (t[j + p + 1] - t[j]) / Scalar(p + 1) * sum;
    }
  }
  return out;
}

/// Prepends a constant column (zeros or ones).
template <typename Derived>
Matrix<typename Derived::Scalar> augment(const Eigen::MatrixBase<Derived>& m, AugmentKind kind) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(m.rows(), m.cols() + 1);
  out.col(0).setConstant(kind == AugmentKind::Ones ? Scalar(1) : Scalar(0));
  out.rightCols(m.cols()) = m;
  return out;
}

/// A univariate branch: coeffs = [c_0, c_1, ..., c_df] with the constant term first.
/// Under Representation::G the basis models g; under GPrime it models g'.
template <typename Scalar>
struct SplineFunction {
  SplineBasis<Scalar> basis;
  Vector<Scalar> coeffs;
  Representation representation = Representation::G;

  SplineFunction() = default;
  SplineFunction(SplineBasis<Scalar> b, Vector<Scalar> c, Representation rep)
      : basis(std::move(b)), coeffs(std::move(c)), representation(rep) {
    if (coeffs.size() != basis.df() + 1) {
      throw std::invalid_argument("SplineFunction: expected df+1 = " + std::to_string(basis.df() + 1) +
                                  " coefficients, got " + std::to_string(coeffs.size()));
    }
  }

  template <typename Derived>
  Vector<Scalar> eval(const Eigen::DenseBase<Derived>& u) const {
    const auto spline = coeffs.tail(basis.df());
    if (representation == Representation::G) {
      return (design_matrix(basis, u) * spline).array() + coeffs[0];
    }
    return (integral_design_matrix(basis, u) * spline).array() + coeffs[0];
  }

  template <typename Derived>
  Vector<Scalar> eval_derivative(const Eigen::DenseBase<Derived>& u) const {
    const auto spline = coeffs.tail(basis.df());
    if (representation == Representation::G) return derivative_design_matrix(basis, u) * spline;
    return design_matrix(basis, u) * spline;
  }

  Scalar eval(Scalar u) const { return eval(Vector<Scalar>::Constant(1, u))[0]; }
  Scalar eval_derivative(Scalar u) const { return eval_derivative(Vector<Scalar>::Constant(1, u))[0]; }
};

using SplineFunctiond = SplineFunction<double>;

}  // namespace cmtf
