// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/expr/node.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_set>

namespace qk {

std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
#define QK_X(name) \
  case NodeKind::name: return #name;
    QK_NODE_KINDS(QK_X)
#undef QK_X
  }
  return "?";
}

std::string to_string(const Shape& s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

NodeClass node_class(NodeKind k) noexcept {
  using N = NodeKind;
  switch (k) {
    case N::leaf: return NodeClass::leaf;
    case N::gen_fill:
    case N::gen_eye:
    case N::gen_linspace:
    case N::gen_randu:
    case N::gen_randn: return NodeClass::generator;
    case N::times:
    case N::join_rows:
    case N::join_cols: return NodeClass::glue;
    case N::find:
    case N::find_relational:
    case N::all_reduce:
    case N::any_reduce: return NodeClass::terminal;
    case N::plus:
    case N::minus:
    case N::schur:
    case N::div: return NodeClass::eglue;
    case N::conv_to: return NodeClass::mtop;
    default: break;
  }
  return elem_op_of(k) ? NodeClass::eop : NodeClass::op;
}

std::optional<ElemOp> elem_op_of(NodeKind k) noexcept {
  using N = NodeKind;
  switch (k) {
    case N::exp: return ElemOp::exp;
    case N::log: return ElemOp::log;
    case N::log10: return ElemOp::log10;
    case N::sqrt: return ElemOp::sqrt;
    case N::square: return ElemOp::square;
    case N::pow: return ElemOp::pow;
    case N::cos: return ElemOp::cos;
    case N::sin: return ElemOp::sin;
    case N::tan: return ElemOp::tan;
    case N::acos: return ElemOp::acos;
    case N::asin: return ElemOp::asin;
    case N::atan: return ElemOp::atan;
    case N::abs: return ElemOp::abs;
    case N::scalar_plus: return ElemOp::scalar_plus;
    case N::scalar_minus_pre: return ElemOp::scalar_minus_pre;
    case N::scalar_minus_post: return ElemOp::scalar_minus_post;
    case N::scalar_times: return ElemOp::scalar_times;
    case N::scalar_div_pre: return ElemOp::scalar_div_pre;
    case N::scalar_div_post: return ElemOp::scalar_div_post;
    case N::plus: return ElemOp::plus;
    case N::minus: return ElemOp::minus;
    case N::schur: return ElemOp::schur;
    case N::div: return ElemOp::div;
    default: return std::nullopt;
  }
}

NodeKind node_kind_of(ElemOp op) noexcept {
  using N = NodeKind;
  switch (op) {
    case ElemOp::exp: return N::exp;
    case ElemOp::log: return N::log;
    case ElemOp::log10: return N::log10;
    case ElemOp::sqrt: return N::sqrt;
    case ElemOp::square: return N::square;
    case ElemOp::pow: return N::pow;
    case ElemOp::cos: return N::cos;
    case ElemOp::sin: return N::sin;
    case ElemOp::tan: return N::tan;
    case ElemOp::acos: return N::acos;
    case ElemOp::asin: return N::asin;
    case ElemOp::atan: return N::atan;
    case ElemOp::abs: return N::abs;
    case ElemOp::scalar_plus: return N::scalar_plus;
    case ElemOp::scalar_minus_pre: return N::scalar_minus_pre;
    case ElemOp::scalar_minus_post: return N::scalar_minus_post;
    case ElemOp::scalar_times: return N::scalar_times;
    case ElemOp::scalar_div_pre: return N::scalar_div_pre;
    case ElemOp::scalar_div_post: return N::scalar_div_post;
    case ElemOp::plus: return N::plus;
    case ElemOp::minus: return N::minus;
    case ElemOp::schur: return N::schur;
    case ElemOp::div: return N::div;
  }
  return N::plus;
}

namespace {

[[noreturn]] void mismatch(NodeKind k, const Shape& a, const Shape& b, const char* rule) {
  throw std::invalid_argument(std::string(to_string(k)) + ": dimension mismatch " + to_string(a) +
                              " vs " + to_string(b) + " (" + rule + ")");
}

[[noreturn]] void invalid(NodeKind k, const std::string& what) {
  throw std::invalid_argument(std::string(to_string(k)) + ": " + what);
}

uword nonneg(NodeKind k, std::int64_t v, const char* what) {
  if (v < 0) invalid(k, std::string(what) + " must be non-negative");
  return static_cast<uword>(v);
}

std::size_t expected_operands(NodeKind k) {
  switch (node_class(k)) {
    case NodeClass::leaf:
    case NodeClass::generator: return 0;
    case NodeClass::glue:
    case NodeClass::eglue: return 2;
    default: return 1;
  }
}

}  // namespace

Shape infer_shape(NodeKind kind, const std::vector<NodePtr>& ops, const NodeAux& aux) {
  using N = NodeKind;
  if (ops.size() != expected_operands(kind))
    invalid(kind, "expects " + std::to_string(expected_operands(kind)) + " operands, got " +
                      std::to_string(ops.size()));
  for (const auto& o : ops) {
    if (!o) invalid(kind, "null operand");
    if (node_class(o->kind) == NodeClass::terminal)
      invalid(kind, std::string(to_string(o->kind)) + " result cannot be used as an operand");
  }

  const Shape a = ops.empty() ? Shape{} : ops[0]->shape;
  const Shape b = ops.size() > 1 ? ops[1]->shape : Shape{};

  switch (kind) {
    case N::leaf: return a;
    case N::gen_fill:
    case N::gen_eye:
    case N::gen_randu:
    case N::gen_randn: return {nonneg(kind, aux.i[0], "rows"), nonneg(kind, aux.i[1], "cols")};
    case N::gen_linspace:
      if (aux.i[0] < 1) invalid(kind, "needs at least one point");
      return {static_cast<uword>(aux.i[0]), 1};
    case N::htrans: return {a.cols, a.rows};
    case N::diagmat:
      if (a.rows == 1 || a.cols == 1) return {a.n_elem(), a.n_elem()};
      return a;
    case N::diagvec: {
      const std::int64_t k = aux.i[0];
      const std::int64_t r = static_cast<std::int64_t>(a.rows), c = static_cast<std::int64_t>(a.cols);
      if ((k >= 0 && k >= std::max<std::int64_t>(c, 1)) || (k < 0 && -k >= std::max<std::int64_t>(r, 1)))
        invalid(kind, "diagonal index " + std::to_string(k) + " out of range for " + to_string(a));
      const std::int64_t len = k >= 0 ? std::min(r, c - k) : std::min(r + k, c);
      return {static_cast<uword>(std::max<std::int64_t>(len, 0)), 1};
    }
    case N::vectorise:
      if (aux.i[0] == 0) return {a.n_elem(), 1};
      if (aux.i[0] == 1) return {1, a.n_elem()};
      invalid(kind, "dim must be 0 or 1");
    case N::resize:
    case N::reshape_copy: return {nonneg(kind, aux.i[0], "rows"), nonneg(kind, aux.i[1], "cols")};
    case N::repmat:
      return {a.rows * nonneg(kind, aux.i[0], "p"), a.cols * nonneg(kind, aux.i[1], "q")};
    case N::submat: {
      const uword r0 = nonneg(kind, aux.i[0], "row"), c0 = nonneg(kind, aux.i[1], "col");
      const uword nr = nonneg(kind, aux.i[2], "rows"), nc = nonneg(kind, aux.i[3], "cols");
      if (r0 + nr > a.rows || c0 + nc > a.cols)
        invalid(kind, "region (" + std::to_string(r0) + "," + std::to_string(c0) + ")+" +
                          std::to_string(nr) + "x" + std::to_string(nc) + " exceeds " + to_string(a));
      return {nr, nc};
    }
    case N::sum_dim:
    case N::min_dim:
    case N::max_dim:
    case N::mean_dim:
    case N::var_dim:
    case N::stddev_dim:
      if (a.n_elem() == 0) invalid(kind, "empty input");
      if (aux.i[0] == 0) return {1, a.cols};
      if (aux.i[0] == 1) return {a.rows, 1};
      invalid(kind, "dim must be 0 or 1");
    case N::find:
    case N::find_relational: return {a.n_elem(), 1};
    case N::all_reduce:
    case N::any_reduce: return {1, 1};
    case N::times:
      if (a.cols != b.rows) mismatch(kind, a, b, "inner dimensions must agree");
      return {a.rows, b.cols};
    case N::join_rows:
      if (a.rows != b.rows) mismatch(kind, a, b, "row counts must agree");
      return {a.rows, a.cols + b.cols};
    case N::join_cols:
      if (a.cols != b.cols) mismatch(kind, a, b, "column counts must agree");
      return {a.rows + b.rows, a.cols};
    case N::plus:
    case N::minus:
    case N::schur:
    case N::div:
      if (a != b) mismatch(kind, a, b, "element-wise operands must have identical shapes");
      return a;
    case N::conv_to: return a;
    default: return a;  // element-wise unary
  }
}

NodePtr build_node(NodeKind kind, std::vector<NodePtr> operands, NodeAux aux) {
  if (kind == NodeKind::leaf) throw std::invalid_argument("leaf: use build_leaf");
  auto n = std::make_shared<ExprNode>();
  n->shape = infer_shape(kind, operands, aux);

  const NodeClass cls = node_class(kind);
  if (cls == NodeClass::glue || cls == NodeClass::eglue) {
    if (operands[0]->type != operands[1]->type)
      invalid(kind, "element types differ (" + std::string(to_string(operands[0]->type)) + " vs " +
                        std::string(to_string(operands[1]->type)) + "); convert one operand first");
  }
  if (cls == NodeClass::generator || cls == NodeClass::mtop)
    n->type = aux.target;
  else if (cls == NodeClass::terminal)
    n->type = ElemType::u64;
  else
    n->type = operands[0]->type;
  if (kind == NodeKind::times && !is_float(n->type))
    invalid(kind, "matrix product requires a floating point element type");

  n->kind = kind;
  n->operands = std::move(operands);
  n->aux = aux;
  return n;
}

NodePtr build_leaf(const DeviceBuffer& buf, Shape shape) {
  if (buf.valid() && buf.length < shape.n_elem())
    throw std::invalid_argument("leaf: buffer shorter than " + to_string(shape));
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::leaf;
  n->type = buf.elem_type;
  n->shape = shape;
  n->leaf = buf;
  return n;
}

NodePtr rewrite_trans(const NodePtr& x) {
  // A square diagmat result is symmetric.
  if (x->kind == NodeKind::diagmat && x->shape.rows == x->shape.cols) return x;
  if (x->kind == NodeKind::htrans) return x->operands[0];
  return build_node(NodeKind::htrans, {x});
}

namespace {

bool integral(double v) { return std::isfinite(v) && std::trunc(v) == v; }

bool fold_exact(ElemType t, double k1, double k2) {
  switch (t) {
    case ElemType::f32:
    case ElemType::f64: return true;
    case ElemType::i32: {
      constexpr double lo = -2147483648.0, hi = 2147483647.0;
      const double p = k1 * k2;
      return integral(k1) && integral(k2) && k1 >= lo && k1 <= hi && k2 >= lo && k2 <= hi &&
             p >= lo && p <= hi;
    }
    case ElemType::u64: {
      constexpr double hi = 9007199254740992.0;  // 2^53
      return integral(k1) && integral(k2) && k1 >= 0 && k2 >= 0 && k1 * k2 <= hi;
    }
  }
  return false;
}

}  // namespace

NodePtr rewrite_scalar_times(const NodePtr& x, double k) {
  if (x->kind == NodeKind::scalar_times && fold_exact(x->type, k, x->aux.k)) {
    NodeAux aux = x->aux;
    aux.k = k * x->aux.k;
    return build_node(NodeKind::scalar_times, {x->operands[0]}, aux);
  }
  NodeAux aux;
  aux.k = k;
  return build_node(NodeKind::scalar_times, {x}, aux);
}

namespace {

void walk(const NodePtr& root, const std::function<void(const ExprNode&)>& f) {
  std::unordered_set<const ExprNode*> seen;
  std::vector<const ExprNode*> stack{root.get()};
  while (!stack.empty()) {
    const ExprNode* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    f(*n);
    for (const auto& o : n->operands) stack.push_back(o.get());
  }
}

}  // namespace

std::size_t census(const NodePtr& root, NodeKind kind) {
  std::size_t c = 0;
  walk(root, [&](const ExprNode& n) { c += n.kind == kind ? 1 : 0; });
  return c;
}

std::size_t node_count(const NodePtr& root) {
  std::size_t c = 0;
  walk(root, [&](const ExprNode&) { ++c; });
  return c;
}

std::size_t depth(const NodePtr& root) {
  std::size_t d = 0;
  for (const auto& o : root->operands) d = std::max(d, depth(o));
  return d + 1;
}

}  // namespace qk
