#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"

namespace cw {

using Vector = std::vector<double>;

// Dense row-major matrix. Rows are contiguous so the matvec inner loop is a
// straight dot product.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// out = A x + b
inline void affine(const Matrix& a, std::span<const double> x,
                   std::span<const double> b, std::span<double> out) {
  if (x.size() != a.cols || b.size() != a.rows || out.size() != a.rows) {
    raise(ErrorKind::Dimension, "affine: shape mismatch");
  }
  for (std::size_t r = 0; r < a.rows; ++r) {
    out[r] = dot(a.row(r), x.data(), a.cols) + b[r];
  }
}

// out += A^T y
inline void add_matvec_transposed(const Matrix& a, std::span<const double> y,
                                  std::span<double> out) {
  if (y.size() != a.rows || out.size() != a.cols) {
    raise(ErrorKind::Dimension, "add_matvec_transposed: shape mismatch");
  }
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const double* row = a.row(r);
    for (std::size_t c = 0; c < a.cols; ++c) out[c] += yr * row[c];
  }
}

// A += u v^T
inline void add_outer(Matrix& a, std::span<const double> u,
                      std::span<const double> v) {
  if (u.size() != a.rows || v.size() != a.cols) {
    raise(ErrorKind::Dimension, "add_outer: shape mismatch");
  }
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    double* row = a.row(r);
    for (std::size_t c = 0; c < a.cols; ++c) row[c] += ur * v[c];
  }
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace cw
