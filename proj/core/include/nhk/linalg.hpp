#pragma once

// Small dense matrices over double or jets. Pivot selection always looks at
// the value part only, so a jet-valued solve never branches on derivative data.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "nhk/errors.hpp"
#include "nhk/jet.hpp"

namespace nhk {

template <class S>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const S& fill = S{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = S(1.0);
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  S& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const S& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  [[nodiscard]] std::vector<S> column(std::size_t j) const {
    std::vector<S> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  [[nodiscard]] std::vector<S> row(std::size_t i) const {
    return std::vector<S>(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                          data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
  }

  [[nodiscard]] Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  /// Rows [r0, r0+nr) × columns [c0, c0+nc).
  [[nodiscard]] Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    Matrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) {
      throw ContractViolation("matrix product shape mismatch: " + std::to_string(a.rows_) + "x" +
                              std::to_string(a.cols_) + " * " + std::to_string(b.rows_) + "x" +
                              std::to_string(b.cols_));
    }
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t l = 0; l < a.cols_; ++l) {
        const S& ail = a(i, l);
        if (value_of(ail) == 0.0 && is_plain_zero(ail)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += ail * b(l, j);
      }
    }
    return c;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) {
    check_same(a, b);
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
    return a;
  }

  friend Matrix operator-(Matrix a, const Matrix& b) {
    check_same(a, b);
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] -= b.data_[i];
    return a;
  }

 private:
  static bool is_plain_zero(const S& x) {
    if constexpr (std::is_same_v<S, double>) {
      return true;
    } else {
      for (double g : x.grad())
        if (g != 0.0) return false;
      if constexpr (S::order == 2) {
        for (double h : x.hess())
          if (h != 0.0) return false;
      }
      return true;
    }
  }

  static void check_same(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw ContractViolation("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<S> data_;
};

template <class S>
std::vector<S> operator*(const Matrix<S>& a, std::span<const S> x) {
  if (a.cols() != x.size()) throw ContractViolation("matrix-vector shape mismatch");
  std::vector<S> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

template <class S>
std::vector<S> operator*(const Matrix<S>& a, const std::vector<S>& x) {
  return a * std::span<const S>(x);
}

/// Values of a jet matrix.
template <class S>
Matrix<double> values(const Matrix<S>& a) {
  Matrix<double> v(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) v(i, j) = value_of(a(i, j));
  return v;
}

/// Elementwise map (truncation, derivative extraction, conversion).
template <class T, class S, class F>
Matrix<T> map_entries(const Matrix<S>& a, F&& f) {
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = f(a(i, j));
  return out;
}

/// Solves a·X = b by Gauss-Jordan elimination with partial pivoting.
/// Throws InternalInvariant when the best available pivot is below `tol`.
template <class S>
Matrix<S> solve(Matrix<S> a, Matrix<S> b, double tol = 1e-14) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw ContractViolation("solve: shape mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(value_of(a(col, col)));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(value_of(a(r, col)));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (!(best > tol)) {
      throw InternalInvariant("singular matrix in solve (pivot " + std::to_string(best) + ")");
    }
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(piv, j));
    }
    const S inv = S(1.0) / a(col, col);
    for (std::size_t j = 0; j < n; ++j) a(col, j) = a(col, j) * inv;
    for (std::size_t j = 0; j < b.cols(); ++j) b(col, j) = b(col, j) * inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const S f = a(r, col);
      if constexpr (std::is_same_v<S, double>) {
        if (f == 0.0) continue;
      }
      for (std::size_t j = 0; j < n; ++j) a(r, j) -= f * a(col, j);
      for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
    }
  }
  return b;
}

template <class S>
Matrix<S> inverse(const Matrix<S>& a, double tol = 1e-14) {
  return solve(a, Matrix<S>::identity(a.rows()), tol);
}

/// Largest |a(i,j)| over value parts.
template <class S>
double max_abs(const Matrix<S>& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(value_of(a(i, j))));
  return m;
}

}  // namespace nhk
