#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "divcf/error.hpp"

namespace divcf {

// Dense square matrix, row-major. Sized for kernel matrices over a handful of
// candidates, so no blocking or vectorization.
class SquareMatrix {
public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    SquareMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw ValidationError("matrix is not square");
      for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  SquareMatrix minor_matrix(std::size_t row, std::size_t col) const {
    SquareMatrix m(n_ - 1);
    for (std::size_t i = 0, r = 0; i < n_; ++i) {
      if (i == row) continue;
      for (std::size_t j = 0, c = 0; j < n_; ++j) {
        if (j == col) continue;
        m(r, c++) = (*this)(i, j);
      }
      ++r;
    }
    return m;
  }

private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

namespace detail {

// In-place LU with partial pivoting. Returns the sign of the permutation and
// writes the pivots (diagonal of U) to `pivots`.
inline int lu_decompose(SquareMatrix& m, std::vector<std::size_t>& perm,
                        std::vector<double>& pivots) {
  const std::size_t n = m.size();
  perm.resize(n);
  pivots.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  int sign = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m(r, c)) > std::abs(m(p, c))) p = r;
    if (p != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(p, j), m(c, j));
      std::swap(perm[p], perm[c]);
      sign = -sign;
    }
    pivots[c] = m(c, c);
    if (m(c, c) == 0.0) continue;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m(r, c) / m(c, c);
      m(r, c) = f;
      for (std::size_t j = c + 1; j < n; ++j) m(r, j) -= f * m(c, j);
    }
  }
  return sign;
}

}  // namespace detail

inline double determinant(const SquareMatrix& a) {
  const std::size_t n = a.size();
  if (n == 0) return 1.0;
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  SquareMatrix lu = a;
  std::vector<std::size_t> perm;
  std::vector<double> piv;
  double det = detail::lu_decompose(lu, perm, piv);
  for (double p : piv) det *= p;
  return det;
}

// adj(A) = transpose of the cofactor matrix. Uses det(A) * inv(A) when A is
// well conditioned and falls back to explicit cofactors otherwise, so the
// result stays defined for singular A.
inline SquareMatrix adjugate(const SquareMatrix& a) {
  const std::size_t n = a.size();
  SquareMatrix adj(n);
  if (n == 0) return adj;
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  SquareMatrix lu = a;
  std::vector<std::size_t> perm;
  std::vector<double> piv;
  const int sign = detail::lu_decompose(lu, perm, piv);
  double max_piv = 0.0, min_piv = std::numeric_limits<double>::infinity();
  for (double p : piv) {
    max_piv = std::max(max_piv, std::abs(p));
    min_piv = std::min(min_piv, std::abs(p));
  }
  if (max_piv > 0.0 && min_piv > 1e-8 * max_piv) {
    double det = sign;
    for (double p : piv) det *= p;
    // Solve A X = det * I column by column.
    std::vector<double> col(n);
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < n; ++i) col[i] = perm[i] == c ? det : 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) col[i] -= lu(i, j) * col[j];
      for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) col[i] -= lu(i, j) * col[j];
        col[i] /= lu(i, i);
      }
      for (std::size_t i = 0; i < n; ++i) adj(i, c) = col[i];
    }
    return adj;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double cof = determinant(a.minor_matrix(i, j));
      adj(j, i) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * cof;
    }
  return adj;
}

}  // namespace divcf
