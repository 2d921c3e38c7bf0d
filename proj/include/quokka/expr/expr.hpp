// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>

#include "quokka/expr/node.hpp"

namespace qk {

/// Value-semantic handle to an immutable expression DAG. Building an Expr
/// performs no device work; evaluation happens on assignment to a matrix.
class Expr {
 public:
  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  const NodePtr& node() const noexcept { return node_; }
  const ExprNode& operator*() const noexcept { return *node_; }
  const ExprNode* operator->() const noexcept { return node_.get(); }

  Shape shape() const noexcept { return node_->shape; }
  uword n_rows() const noexcept { return node_->shape.rows; }
  uword n_cols() const noexcept { return node_->shape.cols; }
  uword n_elem() const noexcept { return node_->shape.n_elem(); }
  ElemType elem_type() const noexcept { return node_->type; }

  Expr t() const { return Expr(rewrite_trans(node_)); }

 private:
  NodePtr node_;
};

inline Shape shape_of(const Expr& e) noexcept { return e.shape(); }

// element-wise glue
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator%(const Expr& a, const Expr& b);  ///< element-wise product
Expr operator/(const Expr& a, const Expr& b);
/// Matrix product.
Expr operator*(const Expr& a, const Expr& b);

// scalar forms
Expr operator+(const Expr& a, double k);
Expr operator+(double k, const Expr& a);
Expr operator-(const Expr& a, double k);
Expr operator-(double k, const Expr& a);
Expr operator*(const Expr& a, double k);
Expr operator*(double k, const Expr& a);
Expr operator/(const Expr& a, double k);
Expr operator/(double k, const Expr& a);
Expr operator-(const Expr& a);

Expr exp(const Expr& x);
Expr log(const Expr& x);
Expr log10(const Expr& x);
Expr sqrt(const Expr& x);
Expr square(const Expr& x);
Expr pow(const Expr& x, double p);
Expr cos(const Expr& x);
Expr sin(const Expr& x);
Expr tan(const Expr& x);
Expr acos(const Expr& x);
Expr asin(const Expr& x);
Expr atan(const Expr& x);
Expr abs(const Expr& x);

Expr trans(const Expr& x);
Expr diagmat(const Expr& x);
/// Diagonal k as a column vector (k > 0 above the main diagonal, k < 0 below).
Expr diagvec(const Expr& x, std::int64_t k = 0);
/// dim 0: column-wise into a column vector; dim 1: row-wise into a row vector.
Expr vectorise(const Expr& x, int dim = 0);
Expr resize(const Expr& x, uword rows, uword cols);
Expr reshape(const Expr& x, uword rows, uword cols);
Expr repmat(const Expr& x, uword p, uword q);
/// Inclusive corner coordinates, as in submat(first_row, first_col, last_row, last_col).
Expr submat(const Expr& x, uword r0, uword c0, uword r1, uword c1);

/// dim 0 reduces each column to one value (1 x n_cols); dim 1 each row (n_rows x 1).
Expr sum(const Expr& x, int dim = 0);
Expr min(const Expr& x, int dim);
Expr max(const Expr& x, int dim);
Expr mean(const Expr& x, int dim = 0);
/// Unbiased (n - 1) variance.
Expr var(const Expr& x, int dim = 0);
Expr stddev(const Expr& x, int dim = 0);

/// Horizontal concatenation (equal row counts).
Expr join_rows(const Expr& a, const Expr& b);
/// Vertical concatenation (equal column counts).
Expr join_cols(const Expr& a, const Expr& b);

/// Element type conversion node.
Expr convert(const Expr& x, ElemType target);

// generators (lazy; `seed`/`stream` are drawn from the runtime at build time)
Expr fill_expr(uword rows, uword cols, ElemType type, double value);
Expr eye_expr(uword rows, uword cols, ElemType type);
Expr linspace_expr(double start, double end, uword n, ElemType type);
Expr randu_expr(uword rows, uword cols, ElemType type);
Expr randn_expr(uword rows, uword cols, ElemType type);

/// `x <op> k`, consumed only by find / count / all / any.
struct Relation {
  Expr x;
  RelOp op;
  double k;
};

Relation operator<(const Expr& x, double k);
Relation operator<=(const Expr& x, double k);
Relation operator>(const Expr& x, double k);
Relation operator>=(const Expr& x, double k);
Relation operator==(const Expr& x, double k);
Relation operator!=(const Expr& x, double k);

}  // namespace qk
