// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/expr/expr.hpp"

#include "quokka/runtime/runtime.hpp"

namespace qk {

namespace {

Expr unary(NodeKind k, const Expr& x, double scalar = 0.0) {
  NodeAux aux;
  aux.k = scalar;
  return Expr(build_node(k, {x.node()}, aux));
}

Expr unary_i(NodeKind k, const Expr& x, std::int64_t a, std::int64_t b = 0) {
  NodeAux aux;
  aux.i[0] = a;
  aux.i[1] = b;
  return Expr(build_node(k, {x.node()}, aux));
}

Expr glue(NodeKind k, const Expr& a, const Expr& b) {
  return Expr(build_node(k, {a.node(), b.node()}));
}

Expr generator(NodeKind k, uword rows, uword cols, ElemType type, double v = 0.0, double v2 = 0.0) {
  NodeAux aux;
  aux.i[0] = static_cast<std::int64_t>(rows);
  aux.i[1] = static_cast<std::int64_t>(cols);
  aux.target = type;
  aux.k = v;
  aux.k2 = v2;
  if (k == NodeKind::gen_randu || k == NodeKind::gen_randn) {
    auto& rt = Runtime::get();
    aux.seed = rt.seed();
    aux.stream = rt.next_stream();
  }
  return Expr(build_node(k, {}, aux));
}

Relation rel(const Expr& x, RelOp op, double k) { return Relation{x, op, k}; }

}  // namespace

Expr operator+(const Expr& a, const Expr& b) { return glue(NodeKind::plus, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return glue(NodeKind::minus, a, b); }
Expr operator%(const Expr& a, const Expr& b) { return glue(NodeKind::schur, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return glue(NodeKind::div, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return glue(NodeKind::times, a, b); }

Expr operator+(const Expr& a, double k) { return unary(NodeKind::scalar_plus, a, k); }
Expr operator+(double k, const Expr& a) { return unary(NodeKind::scalar_plus, a, k); }
Expr operator-(const Expr& a, double k) { return unary(NodeKind::scalar_minus_post, a, k); }
Expr operator-(double k, const Expr& a) { return unary(NodeKind::scalar_minus_pre, a, k); }
Expr operator*(const Expr& a, double k) { return Expr(rewrite_scalar_times(a.node(), k)); }
Expr operator*(double k, const Expr& a) { return Expr(rewrite_scalar_times(a.node(), k)); }
Expr operator/(const Expr& a, double k) { return unary(NodeKind::scalar_div_post, a, k); }
Expr operator/(double k, const Expr& a) { return unary(NodeKind::scalar_div_pre, a, k); }
Expr operator-(const Expr& a) { return unary(NodeKind::scalar_minus_pre, a, 0.0); }

Expr exp(const Expr& x) { return unary(NodeKind::exp, x); }
Expr log(const Expr& x) { return unary(NodeKind::log, x); }
Expr log10(const Expr& x) { return unary(NodeKind::log10, x); }
Expr sqrt(const Expr& x) { return unary(NodeKind::sqrt, x); }
Expr square(const Expr& x) { return unary(NodeKind::square, x); }
Expr pow(const Expr& x, double p) { return unary(NodeKind::pow, x, p); }
Expr cos(const Expr& x) { return unary(NodeKind::cos, x); }
Expr sin(const Expr& x) { return unary(NodeKind::sin, x); }
Expr tan(const Expr& x) { return unary(NodeKind::tan, x); }
Expr acos(const Expr& x) { return unary(NodeKind::acos, x); }
Expr asin(const Expr& x) { return unary(NodeKind::asin, x); }
Expr atan(const Expr& x) { return unary(NodeKind::atan, x); }
Expr abs(const Expr& x) { return unary(NodeKind::abs, x); }

Expr trans(const Expr& x) { return x.t(); }
Expr diagmat(const Expr& x) { return unary(NodeKind::diagmat, x); }
Expr diagvec(const Expr& x, std::int64_t k) { return unary_i(NodeKind::diagvec, x, k); }
Expr vectorise(const Expr& x, int dim) { return unary_i(NodeKind::vectorise, x, dim); }
Expr resize(const Expr& x, uword rows, uword cols) {
  return unary_i(NodeKind::resize, x, static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols));
}
Expr reshape(const Expr& x, uword rows, uword cols) {
  return unary_i(NodeKind::reshape_copy, x, static_cast<std::int64_t>(rows),
                 static_cast<std::int64_t>(cols));
}
Expr repmat(const Expr& x, uword p, uword q) {
  return unary_i(NodeKind::repmat, x, static_cast<std::int64_t>(p), static_cast<std::int64_t>(q));
}
Expr submat(const Expr& x, uword r0, uword c0, uword r1, uword c1) {
  if (r1 < r0 || c1 < c0) throw std::invalid_argument("submat: last index before first index");
  NodeAux aux;
  aux.i = {static_cast<std::int64_t>(r0), static_cast<std::int64_t>(c0),
           static_cast<std::int64_t>(r1 - r0 + 1), static_cast<std::int64_t>(c1 - c0 + 1)};
  return Expr(build_node(NodeKind::submat, {x.node()}, aux));
}

Expr sum(const Expr& x, int dim) { return unary_i(NodeKind::sum_dim, x, dim); }
Expr min(const Expr& x, int dim) { return unary_i(NodeKind::min_dim, x, dim); }
Expr max(const Expr& x, int dim) { return unary_i(NodeKind::max_dim, x, dim); }
Expr mean(const Expr& x, int dim) { return unary_i(NodeKind::mean_dim, x, dim); }
Expr var(const Expr& x, int dim) { return unary_i(NodeKind::var_dim, x, dim); }
Expr stddev(const Expr& x, int dim) { return unary_i(NodeKind::stddev_dim, x, dim); }

Expr join_rows(const Expr& a, const Expr& b) { return glue(NodeKind::join_rows, a, b); }
Expr join_cols(const Expr& a, const Expr& b) { return glue(NodeKind::join_cols, a, b); }

Expr convert(const Expr& x, ElemType target) {
  NodeAux aux;
  aux.target = target;
  return Expr(build_node(NodeKind::conv_to, {x.node()}, aux));
}

Expr fill_expr(uword rows, uword cols, ElemType type, double value) {
  return generator(NodeKind::gen_fill, rows, cols, type, value);
}
Expr eye_expr(uword rows, uword cols, ElemType type) {
  return generator(NodeKind::gen_eye, rows, cols, type);
}
Expr linspace_expr(double start, double end, uword n, ElemType type) {
  return generator(NodeKind::gen_linspace, n, 1, type, start, end);
}
Expr randu_expr(uword rows, uword cols, ElemType type) {
  return generator(NodeKind::gen_randu, rows, cols, type);
}
Expr randn_expr(uword rows, uword cols, ElemType type) {
  return generator(NodeKind::gen_randn, rows, cols, type);
}

Relation operator<(const Expr& x, double k) { return rel(x, RelOp::lt, k); }
Relation operator<=(const Expr& x, double k) { return rel(x, RelOp::le, k); }
Relation operator>(const Expr& x, double k) { return rel(x, RelOp::gt, k); }
Relation operator>=(const Expr& x, double k) { return rel(x, RelOp::ge, k); }
Relation operator==(const Expr& x, double k) { return rel(x, RelOp::eq, k); }
Relation operator!=(const Expr& x, double k) { return rel(x, RelOp::ne, k); }

}  // namespace qk
