// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "quokka/expr/expr.hpp"
#include "quokka/runtime/types.hpp"

namespace qk {

struct PlanOptions {
  bool fuse_elementwise = true;  ///< false: one launch per element-wise node
  bool fuse_conversions = true;  ///< false: conv_to always runs as its own copy kernel
  std::size_t max_chain = 8;     ///< element-wise ops per fused kernel
};

/// Where a step reads a value from: a temporary slot, or a leaf's buffer.
struct ValueRef {
  int slot = -1;
  DeviceBuffer leaf;
  ElemType type = ElemType::f32;
  Shape shape;

  bool is_leaf() const noexcept { return slot < 0; }
};

struct PlanStep {
  kernels::KernelKind kind = kernels::KernelKind::mov_copy;
  ElemType in_type = ElemType::f32;
  ElemType out_type = ElemType::f32;
  std::vector<ValueRef> inputs;
  std::vector<int> outputs;  ///< slots
  std::vector<double> scalars;
  std::array<std::uint64_t, 8> geom{};
  std::uint64_t n_elem = 0;
  std::shared_ptr<const kernels::FusedProgram> program;
  const ExprNode* root = nullptr;  ///< node whose value this step produces
};

struct TempSlot {
  std::size_t n_elem = 0;
  ElemType type = ElemType::f32;
  int producer = -1;  ///< step index that writes it
  int last_use = -1;  ///< last step index that reads it
};

/// Records a conv_to node absorbed into another node's kernel.
struct FusionNote {
  const ExprNode* conversion = nullptr;
  const ExprNode* into = nullptr;
  int step = -1;
};

struct EvalPlan {
  std::vector<PlanStep> steps;
  std::vector<TempSlot> slots;
  std::vector<FusionNote> fused_conversions;
  ValueRef result;  ///< a slot, or a leaf when the expression is a bare leaf
  Shape shape;
  ElemType out_type = ElemType::f32;

  std::size_t invocations() const noexcept { return steps.size(); }
  std::string describe() const;
};

/// Lowers `expr` into kernel invocations producing a value of `out_type`.
/// Terminal kinds (find, all, any) are rejected: they are evaluated eagerly.
EvalPlan plan(const Expr& expr, ElemType out_type, const PlanOptions& opts = {});

}  // namespace qk
