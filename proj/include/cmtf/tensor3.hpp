#pragma once

// Dense third-order tensors, unfoldings and CP reconstruction.
//
// Storage order: entry (i, j, k) of an n x m x S tensor lives at offset
// i + j*n + k*n*m (zero-based). Frontal slice k is therefore a contiguous
// column-major n x m block.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace cmtf {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;

template <typename Scalar>
class Tensor3 {
public:
  Tensor3() = default;

  Tensor3(Index n, Index m, Index s) : dims_{n, m, s}, data_(Vector<Scalar>::Zero(n * m * s)) {
    if (n <= 0 || m <= 0 || s <= 0) {
      throw std::invalid_argument("Tensor3: dimensions must be positive");
    }
  }

  Tensor3(Index n, Index m, Index s, Vector<Scalar> data) : dims_{n, m, s}, data_(std::move(data)) {
    if (n <= 0 || m <= 0 || s <= 0) {
      throw std::invalid_argument("Tensor3: dimensions must be positive");
    }
    if (data_.size() != n * m * s) {
      throw std::invalid_argument("Tensor3: data length " + std::to_string(data_.size()) +
                                  " does not match n*m*S = " + std::to_string(n * m * s));
    }
  }

  static Tensor3 Zero(Index n, Index m, Index s) { return Tensor3(n, m, s); }

  Index rows() const { return dims_[0]; }
  Index cols() const { return dims_[1]; }
  Index slices() const { return dims_[2]; }
  std::array<Index, 3> dims() const { return dims_; }

  Scalar& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  Scalar operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

  Eigen::Map<Matrix<Scalar>> slice(Index k) {
    return Eigen::Map<Matrix<Scalar>>(data_.data() + k * dims_[0] * dims_[1], dims_[0], dims_[1]);
  }
  Eigen::Map<const Matrix<Scalar>> slice(Index k) const {
    return Eigen::Map<const Matrix<Scalar>>(data_.data() + k * dims_[0] * dims_[1], dims_[0],
                                            dims_[1]);
  }

  const Vector<Scalar>& data() const { return data_; }
  Vector<Scalar>& data() { return data_; }

  Tensor3& operator-=(const Tensor3& other) {
    check_same_dims(other);
    data_ -= other.data_;
    return *this;
  }
  Tensor3& operator*=(Scalar a) {
    data_ *= a;
    return *this;
  }

  friend Tensor3 operator-(Tensor3 lhs, const Tensor3& rhs) { return lhs -= rhs; }
  friend Tensor3 operator*(Scalar a, Tensor3 t) { return t *= a; }

  void check_same_dims(const Tensor3& other) const {
    if (dims_ != other.dims_) {
      throw std::invalid_argument("Tensor3: dimension mismatch");
    }
  }

private:
  Index offset(Index i, Index j, Index k) const { return i + j * dims_[0] + k * dims_[0] * dims_[1]; }

  std::array<Index, 3> dims_{0, 0, 0};
  Vector<Scalar> data_;
};

using Tensor3d = Tensor3<double>;

/// Factor matrices of a rank-r CPD: t(i,j,k) = sum_r A(i,r) B(j,r) C(k,r).
template <typename Scalar>
struct CpdFactors {
  Matrix<Scalar> A;
  Matrix<Scalar> B;
  Matrix<Scalar> C;

  Index rank() const { return A.cols(); }
};

/// Mode-k unfolding (mode in {1,2,3}); mode-k fibers become columns and the
/// remaining indices are ordered with the lower mode varying fastest.
///   mode 1: n x (m*S), (i, j + k*m)
///   mode 2: m x (n*S), (j, i + k*n)
///   mode 3: S x (n*m), (k, i + j*n)
template <typename Scalar>
Matrix<Scalar> unfold(const Tensor3<Scalar>& t, int mode) {
  const Index n = t.rows(), m = t.cols(), s = t.slices();
  switch (mode) {
    case 1: {
      Matrix<Scalar> out(n, m * s);
      for (Index k = 0; k < s; ++k) out.middleCols(k * m, m) = t.slice(k);
      return out;
    }
    case 2: {
      Matrix<Scalar> out(m, n * s);
      for (Index k = 0; k < s; ++k) out.middleCols(k * n, n) = t.slice(k).transpose();
      return out;
    }
    case 3: {
      // Row k is the vectorized (column-major) frontal slice k.
      Eigen::Map<const Matrix<Scalar>> flat(t.data().data(), n * m, s);
      return flat.transpose();
    }
    default:
      throw std::invalid_argument("unfold: mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

/// Columnwise Kronecker product: column j of the result is kron(X.col(j), Y.col(j)).
template <typename DerivedX, typename DerivedY>
Matrix<typename DerivedX::Scalar> khatri_rao(const Eigen::MatrixBase<DerivedX>& x,
                                             const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.cols() != y.cols()) {
    throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(x.cols()) +
                                " vs " + std::to_string(y.cols()) + ")");
  }
  const Index p = x.rows(), q = y.rows();
  Matrix<Scalar> out(p * q, x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index a = 0; a < p; ++a) {
      out.col(c).segment(a * q, q) = x(a, c) * y.col(c);
    }
  }
  return out;
}

/// Frontal slice k = A * diag(C.row(k)) * B^T.
template <typename Scalar>
Tensor3<Scalar> reconstruct(const CpdFactors<Scalar>& f) {
  const Index r = f.A.cols();
  if (f.B.cols() != r || f.C.cols() != r) {
    throw std::invalid_argument("reconstruct: factor matrices must share the column count");
  }
  if (f.A.rows() == 0 || f.B.rows() == 0 || f.C.rows() == 0) {
    throw std::invalid_argument("reconstruct: empty factor matrix");
  }
  Tensor3<Scalar> t(f.A.rows(), f.B.rows(), f.C.rows());
  for (Index k = 0; k < f.C.rows(); ++k) {
    t.slice(k).noalias() = f.A * f.C.row(k).asDiagonal() * f.B.transpose();
  }
  return t;
}

template <typename Scalar>
Scalar frob_norm_sq(const Tensor3<Scalar>& t) {
  return t.data().squaredNorm();
}

template <typename Derived>
typename Derived::Scalar frob_norm_sq(const Eigen::MatrixBase<Derived>& m) {
  return m.squaredNorm();
}

}  // namespace cmtf
