// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "quokka/tensor/functions.hpp"
#include "quokka/tensor/matrix.hpp"

namespace qk {

/// Raised when an elimination meets a column with no nonzero pivot.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, std::size_t column)
      : std::runtime_error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Raised by chol when a pivot is not strictly positive.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  NotPositiveDefiniteError(const std::string& what, std::size_t pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Row-pivot record of an LU factorisation: row i of P*X is row order(i) of X.
struct PermutationVector {
  uvec order;

  uword n_elem() const { return order.n_elem(); }
  bool is_bijection() const;
  /// Permutation matrix P with P(i, order(i)) = 1.
  Matrix as_matrix(ElemType type) const;
};

struct NormKind {
  enum class Tag : std::uint8_t { p, inf, neg_inf, fro };
  Tag tag = Tag::p;
  unsigned p = 2;

  static NormKind order(unsigned p) { return {Tag::p, p}; }
  static NormKind infinity() { return {Tag::inf, 0}; }
  static NormKind neg_infinity() { return {Tag::neg_inf, 0}; }
  static NormKind frobenius() { return {Tag::fro, 0}; }
  /// "inf", "-inf" or "fro".
  static NormKind parse(std::string_view s);
};

Matrix gemm(const Expr& a, const Expr& b);
Matrix gemv(const Expr& a, const Expr& x);

/// P*X = L*U with partial pivoting. Throws SingularMatrixError.
void lu(Matrix& L, Matrix& U, PermutationVector& P, const Expr& X);
/// As above with P as a permutation matrix.
void lu(Matrix& L, Matrix& U, Matrix& P, const Expr& X);
/// X = L*U where L = P^T * (unit lower) carries the row permutation.
void lu(Matrix& L, Matrix& U, const Expr& X);

/// Upper-triangular R with X = R^T * R.
void chol(Matrix& R, const Expr& X);
Matrix chol(const Expr& X);

/// Solves A*X = B through LU with partial pivoting.
Matrix solve(const Expr& A, const Expr& B);
double det(const Expr& A);

/// Eigenvalues of a symmetric matrix, ascending, as a column vector.
Matrix eig_sym(const Expr& X);
/// Singular values, descending, as a column vector.
Matrix svd(const Expr& X);
/// Moore-Penrose pseudo-inverse; singular values below 1e-6 * max are dropped.
Matrix pinv(const Expr& X);

double trace(const Expr& A);
double norm(const Expr& x, unsigned p = 2);
double norm(const Expr& x, NormKind kind);
double norm(const Expr& x, std::string_view kind);
/// Value of a 1x1 expression.
double as_scalar(const Expr& x);

}  // namespace qk
