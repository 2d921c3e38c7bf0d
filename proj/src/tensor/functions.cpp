// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/tensor/functions.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "quokka/runtime/runtime.hpp"

namespace qk {

namespace detail {

TypedRelation lower_relation(RelOp op, double k, ElemType t) {
  if (is_float(t) || op == RelOp::none) return {op, k};
  const double mn = t == ElemType::i32 ? std::numeric_limits<std::int32_t>::min() : 0.0;
  const double mx = t == ElemType::i32 ? std::numeric_limits<std::int32_t>::max() : 0x1p64;
  const TypedRelation always{RelOp::ge, mn}, never{RelOp::lt, mn};
  if (std::isnan(k)) return op == RelOp::ne ? always : never;

  // Reduce to x >= lo or x <= hi with an integral, in-range threshold.
  auto at_least = [&](double lo) {
    if (lo <= mn) return always;
    if (lo > mx) return never;
    return TypedRelation{RelOp::ge, lo};
  };
  auto at_most = [&](double hi) {
    if (hi < mn) return never;
    if (hi >= mx) return always;
    return TypedRelation{RelOp::le, hi};
  };
  switch (op) {
    case RelOp::gt: return at_least(std::floor(k) + 1);
    case RelOp::ge: return at_least(std::ceil(k));
    case RelOp::lt: return at_most(std::ceil(k) - 1);
    case RelOp::le: return at_most(std::floor(k));
    case RelOp::eq:
      if (k != std::floor(k) || k < mn || k > mx) return never;
      return {RelOp::eq, k};
    case RelOp::ne:
      if (k != std::floor(k) || k < mn || k > mx) return always;
      return {RelOp::ne, k};
    default: return {op, k};
  }
}

Staged stage(const Expr& x) {
  Staged s{Matrix(x.elem_type()), {}, x.shape(), x.elem_type()};
  if (x->kind == NodeKind::leaf && (x->leaf.valid() || x.n_elem() == 0)) {
    s.buf = x->leaf;
  } else {
    evaluate(x, s.tmp);
    s.buf = s.tmp.get_dev_mem();
  }
  return s;
}

}  // namespace detail

namespace {

template <class T> T read_one(const DeviceBuffer& b, std::size_t i = 0) {
  T v{};
  Runtime::get().copy_to_host(b, i, std::as_writable_bytes(std::span<T>(&v, 1)));
  return v;
}

double read_scalar(const DeviceBuffer& b) {
  return visit_elem_type(b.elem_type, [&](auto tag) {
    using T = typename decltype(tag)::type;
    return static_cast<double>(read_one<T>(b));
  });
}

/// Owns a scratch device buffer for one terminal result.
struct Scratch {
  DeviceBuffer buf;
  Scratch(std::size_t n, ElemType t) : buf(Runtime::get().acquire_memory(n, t)) {}
  ~Scratch() { Runtime::get().release(buf); }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
};

double reduce(kernels::KernelKind kind, const Expr& x, const Expr* y) {
  auto a = detail::stage(x);
  std::optional<detail::Staged> b;
  if (y) b.emplace(detail::stage(*y));
  if (a.shape.n_elem() == 0) {
    if (kind == kernels::KernelKind::reduce_min || kind == kernels::KernelKind::reduce_max)
      throw std::invalid_argument(std::string(kind == kernels::KernelKind::reduce_min ? "min" : "max") +
                                  "(): empty object");
    return 0.0;
  }
  Scratch out(1, a.type);
  KernelInvocation inv;
  inv.kind = kind;
  inv.in_type = a.type;
  inv.out_type = a.type;
  inv.inputs = {a.buf};
  if (b) inv.inputs.push_back(b->buf);
  inv.outputs = {out.buf};
  inv.n_elem = a.shape.n_elem();
  Runtime::get().enqueue(std::move(inv));
  return read_scalar(out.buf);
}

KernelInvocation predicate(kernels::KernelKind kind, const detail::Staged& s, RelOp op, double k,
                           std::uint64_t mode) {
  const auto rel = detail::lower_relation(op, k, s.type);
  KernelInvocation inv;
  inv.kind = kind;
  inv.in_type = s.type;
  inv.out_type = ElemType::u64;
  inv.inputs = {s.buf};
  inv.scalars = {rel.k};
  inv.geom[0] = static_cast<std::uint64_t>(rel.op);
  inv.geom[1] = mode;
  inv.n_elem = s.shape.n_elem();
  return inv;
}

Expr terminal(NodeKind kind, const Expr& x, RelOp op, double k) {
  NodeAux aux;
  aux.i[0] = static_cast<std::int64_t>(op);
  aux.k = k;
  return Expr(build_node(kind, {x.node()}, aux));
}

uvec find_impl(const Expr& x, RelOp op, double k) {
  auto s = detail::stage(x);
  const std::size_t n = s.shape.n_elem();
  uvec result;
  if (n == 0) return result;
  auto& rt = Runtime::get();
  Scratch idx(n, ElemType::u64), cnt(1, ElemType::u64);
  KernelInvocation inv = predicate(kernels::KernelKind::pred_find, s, op, k, 0);
  inv.outputs = {idx.buf, cnt.buf};
  rt.enqueue(std::move(inv));
  const auto found = read_one<std::uint64_t>(cnt.buf);
  result.set_size(found, 1);
  if (found > 0) rt.copy_device(idx.buf, 0, result.get_dev_mem(), 0, found);
  return result;
}

std::uint64_t count_impl(const Expr& x, kernels::KernelKind kind, RelOp op, double k, std::uint64_t mode) {
  auto s = detail::stage(x);
  const std::size_t n = s.shape.n_elem();
  if (n == 0) return kind == kernels::KernelKind::pred_all_any && mode == 0 ? 1 : 0;
  Scratch out(1, ElemType::u64);
  KernelInvocation inv = predicate(kind, s, op, k, mode);
  inv.outputs = {out.buf};
  Runtime::get().enqueue(std::move(inv));
  return read_one<std::uint64_t>(out.buf);
}

}  // namespace

double accu(const Expr& x) { return reduce(kernels::KernelKind::reduce_accu, x, nullptr); }

void accu(const Expr& x, Matrix& out) {
  auto a = detail::stage(x);
  Matrix r(a.type);
  r.set_size(1, 1);
  if (a.shape.n_elem() > 0) {
    KernelInvocation inv;
    inv.kind = kernels::KernelKind::reduce_accu;
    inv.in_type = inv.out_type = a.type;
    inv.inputs = {a.buf};
    inv.outputs = {r.get_dev_mem()};
    inv.n_elem = a.shape.n_elem();
    Runtime::get().enqueue(std::move(inv));
  }
  out = std::move(r);
}

double dot(const Expr& a, const Expr& b) {
  if (a.n_elem() != b.n_elem())
    throw std::invalid_argument("dot(): length mismatch (" + std::to_string(a.n_elem()) + " vs " +
                                std::to_string(b.n_elem()) + ")");
  if (a.elem_type() != b.elem_type())
    throw std::invalid_argument("dot(): element types differ; convert one operand first");
  return reduce(kernels::KernelKind::reduce_dot, a, &b);
}

double min(const Expr& x) { return reduce(kernels::KernelKind::reduce_min, x, nullptr); }
double max(const Expr& x) { return reduce(kernels::KernelKind::reduce_max, x, nullptr); }

uvec find(const Expr& x) {
  const Expr t = terminal(NodeKind::find, x, RelOp::none, 0.0);
  return find_impl(Expr(t->operands[0]), RelOp::none, 0.0);
}

uvec find(const Relation& r) {
  const Expr t = terminal(NodeKind::find_relational, r.x, r.op, r.k);
  return find_impl(Expr(t->operands[0]), r.op, r.k);
}

uword count(const Relation& r) {
  const Expr t = terminal(NodeKind::find_relational, r.x, r.op, r.k);
  return count_impl(Expr(t->operands[0]), kernels::KernelKind::pred_count, r.op, r.k, 0);
}

bool all(const Expr& x) {
  const Expr t = terminal(NodeKind::all_reduce, x, RelOp::none, 0.0);
  return count_impl(Expr(t->operands[0]), kernels::KernelKind::pred_all_any, RelOp::none, 0.0, 0) != 0;
}

bool all(const Relation& r) {
  const Expr t = terminal(NodeKind::all_reduce, r.x, r.op, r.k);
  return count_impl(Expr(t->operands[0]), kernels::KernelKind::pred_all_any, r.op, r.k, 0) != 0;
}

bool any(const Expr& x) {
  const Expr t = terminal(NodeKind::any_reduce, x, RelOp::none, 0.0);
  return count_impl(Expr(t->operands[0]), kernels::KernelKind::pred_all_any, RelOp::none, 0.0, 1) != 0;
}

bool any(const Relation& r) {
  const Expr t = terminal(NodeKind::any_reduce, r.x, r.op, r.k);
  return count_impl(Expr(t->operands[0]), kernels::KernelKind::pred_all_any, r.op, r.k, 1) != 0;
}

}  // namespace qk
