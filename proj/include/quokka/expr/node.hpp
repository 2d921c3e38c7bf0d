// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quokka/elem_ops.hpp"
#include "quokka/elem_type.hpp"
#include "quokka/runtime/types.hpp"

namespace qk {

// clang-format off
#define QK_NODE_KINDS(X)                                                        \
  X(leaf)                                                                       \
  X(gen_fill) X(gen_eye) X(gen_linspace) X(gen_randu) X(gen_randn)              \
  X(htrans) X(diagmat) X(diagvec) X(vectorise) X(resize) X(reshape_copy)        \
  X(repmat) X(submat)                                                           \
  X(sum_dim) X(min_dim) X(max_dim) X(mean_dim) X(var_dim) X(stddev_dim)         \
  X(find) X(find_relational) X(all_reduce) X(any_reduce)                        \
  X(times) X(join_rows) X(join_cols)                                            \
  X(exp) X(log) X(log10) X(sqrt) X(square) X(pow) X(cos) X(sin) X(tan)          \
  X(acos) X(asin) X(atan) X(abs)                                                \
  X(scalar_plus) X(scalar_minus_pre) X(scalar_minus_post) X(scalar_times)       \
  X(scalar_div_pre) X(scalar_div_post)                                          \
  X(plus) X(minus) X(schur) X(div)                                              \
  X(conv_to)
// clang-format on

enum class NodeKind : std::uint8_t {
#define QK_X(name) name,
  QK_NODE_KINDS(QK_X)
#undef QK_X
};

std::string_view to_string(NodeKind k) noexcept;

enum class NodeClass : std::uint8_t {
  leaf,       // reference to a matrix's device memory
  generator,  // zeros/ones/eye/fill/linspace/randu/randn
  op,         // unary structural / reduction
  glue,       // binary structural (times, joins)
  eop,        // element-wise unary (possibly with a scalar)
  eglue,      // element-wise binary
  mtop,       // element type change
  terminal,   // find / all / any: evaluated eagerly, never an operand
};

NodeClass node_class(NodeKind k) noexcept;
/// Element-wise kinds map onto the shared element-op table.
std::optional<ElemOp> elem_op_of(NodeKind k) noexcept;
NodeKind node_kind_of(ElemOp op) noexcept;

struct Shape {
  uword rows = 0;
  uword cols = 0;
  uword n_elem() const noexcept { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

/// Per-kind metadata. Unused fields stay zero.
struct NodeAux {
  double k = 0.0;   // scalar operand, fill value, linspace start, relational threshold
  double k2 = 0.0;  // linspace end
  std::array<std::int64_t, 4> i{};  // dims, offsets, dim selector, diagonal index, relop
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  ElemType target = ElemType::f32;  // conv_to / generator element type
};

/// Immutable expression node. Holds references to operands (child nodes, or a
/// leaf's device buffer), never copies of operand data.
struct ExprNode {
  NodeKind kind = NodeKind::leaf;
  ElemType type = ElemType::f32;  ///< element type of the result
  Shape shape;                    ///< inferred once at construction
  std::vector<NodePtr> operands;
  DeviceBuffer leaf;  ///< leaves only
  NodeAux aux;
};

/// Shape rule for `kind`. Throws std::invalid_argument (naming the kind and
/// the offending shapes) when operands are inconsistent.
Shape infer_shape(NodeKind kind, const std::vector<NodePtr>& operands, const NodeAux& aux);

/// Builds a node with no rewrites and no device work.
NodePtr build_node(NodeKind kind, std::vector<NodePtr> operands, NodeAux aux = {});
/// Leaf over existing device memory.
NodePtr build_leaf(const DeviceBuffer& buf, Shape shape);

/// trans(diagmat(V)) -> diagmat(V); trans(trans(X)) -> X; otherwise htrans(X).
NodePtr rewrite_trans(const NodePtr& x);
/// k1*(k2*X) -> (k1*k2)*X when the product is exact for the element type.
NodePtr rewrite_scalar_times(const NodePtr& x, double k);

/// Number of nodes of `kind` reachable from `root` (shared nodes counted once).
std::size_t census(const NodePtr& root, NodeKind kind);
std::size_t node_count(const NodePtr& root);
std::size_t depth(const NodePtr& root);

}  // namespace qk
