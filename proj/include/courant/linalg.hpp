#pragma once

// Exact linear algebra: dense rational matrices with Gaussian elimination,
// and small polynomial matrices (determinant, inverse when the determinant
// is a unit).

#include <optional>
#include <vector>

#include "courant/poly.hpp"

namespace courant {

class QMatrix {
 public:
  QMatrix() = default;
  QMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Rational& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  bool is_zero() const {
    for (const auto& x : a_)
      if (sgn(x) != 0) return false;
    return true;
  }

  friend QMatrix operator*(const QMatrix& a, const QMatrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix shape mismatch");
    QMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const Rational& x = a(i, k);
        if (sgn(x) == 0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j)
          if (sgn(b(k, j)) != 0) c(i, j) += x * b(k, j);
      }
    return c;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Rational> a_;
};

/// Reduced row echelon form in place; returns pivot columns.
inline std::vector<std::size_t> rref(QMatrix& m) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
    std::size_t p = row;
    while (p < m.rows() && sgn(m(p, col)) == 0) ++p;
    if (p == m.rows()) continue;
    if (p != row)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(row, j));
    Rational inv = 1 / m(row, col);
    for (std::size_t j = col; j < m.cols(); ++j) m(row, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == row || sgn(m(i, col)) == 0) continue;
      Rational f = m(i, col);
      for (std::size_t j = col; j < m.cols(); ++j)
        if (sgn(m(row, j)) != 0) m(i, j) -= f * m(row, j);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

inline std::size_t rank(QMatrix m) { return rref(m).size(); }

/// Basis of the right kernel {v : M v = 0}.
inline std::vector<std::vector<Rational>> nullspace(QMatrix m) {
  auto piv = rref(m);
  std::vector<bool> is_piv(m.cols(), false);
  for (auto p : piv) is_piv[p] = true;
  std::vector<std::vector<Rational>> basis;
  for (std::size_t free = 0; free < m.cols(); ++free) {
    if (is_piv[free]) continue;
    std::vector<Rational> v(m.cols());
    v[free] = 1;
    for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m(r, free);
    basis.push_back(std::move(v));
  }
  return basis;
}

struct SolveResult {
  bool feasible = false;
  std::vector<Rational> solution;     // when feasible
  std::vector<Rational> certificate;  // y with y^T A = 0 and y^T b != 0, when infeasible
};

/// Solves A x = b exactly. If infeasible, returns a row combination that
/// kills every column of A but not b.
inline SolveResult solve(const QMatrix& a, const std::vector<Rational>& b) {
  const std::size_t n = a.rows(), k = a.cols();
  if (b.size() != n) throw std::invalid_argument("right-hand side has wrong length");
  QMatrix aug(n, k + 1 + n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) aug(i, j) = a(i, j);
    aug(i, k) = b[i];
    aug(i, k + 1 + i) = 1;
  }
  // eliminate only over the columns of A, carrying b and the row operations along
  std::size_t row = 0;
  std::vector<std::size_t> piv;
  for (std::size_t col = 0; col < k && row < n; ++col) {
    std::size_t p = row;
    while (p < n && sgn(aug(p, col)) == 0) ++p;
    if (p == n) continue;
    if (p != row)
      for (std::size_t j = 0; j < aug.cols(); ++j) std::swap(aug(p, j), aug(row, j));
    Rational inv = 1 / aug(row, col);
    for (std::size_t j = col; j < aug.cols(); ++j) aug(row, j) *= inv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == row || sgn(aug(i, col)) == 0) continue;
      Rational f = aug(i, col);
      for (std::size_t j = col; j < aug.cols(); ++j)
        if (sgn(aug(row, j)) != 0) aug(i, j) -= f * aug(row, j);
    }
    piv.push_back(col);
    ++row;
  }
  SolveResult res;
  for (std::size_t i = row; i < n; ++i) {
    if (sgn(aug(i, k)) != 0) {
      res.certificate.resize(n);
      for (std::size_t j = 0; j < n; ++j) res.certificate[j] = aug(i, k + 1 + j);
      return res;
    }
  }
  res.feasible = true;
  res.solution.assign(k, Rational(0));
  for (std::size_t r = 0; r < piv.size(); ++r) res.solution[piv[r]] = aug(r, k);
  return res;
}

using PolyMatrix = std::vector<std::vector<Poly>>;

inline Poly determinant(const PolyMatrix& m, const Backend& b) {
  const std::size_t n = m.size();
  if (n == 0) return Poly(b, 1);
  if (n == 1) return m[0][0];
  // Laplace expansion along the first row; ranks here are small
  Poly det(b);
  for (std::size_t j = 0; j < n; ++j) {
    if (m[0][j].is_zero()) continue;
    PolyMatrix minor;
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<Poly> row;
      for (std::size_t c = 0; c < n; ++c)
        if (c != j) row.push_back(m[i][c]);
      minor.push_back(std::move(row));
    }
    Poly term = m[0][j] * determinant(minor, b);
    det = (j % 2 == 0) ? det + term : det - term;
  }
  return det;
}

/// Inverse of a square polynomial matrix whose determinant is a unit of A.
inline PolyMatrix inverse_unit_det(const PolyMatrix& m, const Backend& b) {
  const std::size_t n = m.size();
  Poly det = determinant(m, b);
  Poly dinv = unit_inverse(det);
  PolyMatrix inv(n, std::vector<Poly>(n, Poly(b)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      PolyMatrix minor;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == j) continue;
        std::vector<Poly> row;
        for (std::size_t c = 0; c < n; ++c)
          if (c != i) row.push_back(m[r][c]);
        minor.push_back(std::move(row));
      }
      Poly cof = determinant(minor, b);
      inv[i][j] = ((i + j) % 2 == 0 ? cof : -cof) * dinv;
    }
  return inv;
}

inline PolyMatrix matmul(const PolyMatrix& a, const PolyMatrix& c, const Backend& b) {
  std::size_t n = a.size(), k = c.size(), p = k ? c[0].size() : 0;
  PolyMatrix r(n, std::vector<Poly>(p, Poly(b)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t l = 0; l < k; ++l)
        if (!a[i][l].is_zero() && !c[l][j].is_zero()) r[i][j] += a[i][l] * c[l][j];
  return r;
}

}  // namespace courant
