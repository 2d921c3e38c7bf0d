// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/expr/plan.hpp"

#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace qk {

using kernels::FusedProgram;
using kernels::GenKind;
using kernels::Instr;
using kernels::KernelKind;

namespace {

bool elementwise_class(const ExprNode& n) {
  const auto c = node_class(n.kind);
  return c == NodeClass::eop || c == NodeClass::eglue || c == NodeClass::generator;
}

bool counts_as_op(const ExprNode& n) {
  const auto c = node_class(n.kind);
  return c == NodeClass::eop || c == NodeClass::eglue;
}

bool movement_kind(NodeKind k) {
  switch (k) {
    case NodeKind::htrans:
    case NodeKind::diagmat:
    case NodeKind::diagvec:
    case NodeKind::vectorise:
    case NodeKind::resize:
    case NodeKind::reshape_copy:
    case NodeKind::repmat:
    case NodeKind::submat:
    case NodeKind::join_rows:
    case NodeKind::join_cols: return true;
    default: return false;
  }
}

KernelKind reduce_dim_kernel(NodeKind k) {
  switch (k) {
    case NodeKind::sum_dim: return KernelKind::reduce_dim_sum;
    case NodeKind::min_dim: return KernelKind::reduce_dim_min;
    case NodeKind::max_dim: return KernelKind::reduce_dim_max;
    case NodeKind::mean_dim: return KernelKind::reduce_dim_mean;
    case NodeKind::var_dim: return KernelKind::reduce_dim_var;
    default: return KernelKind::reduce_dim_stddev;
  }
}

std::uint64_t u(std::int64_t v) { return static_cast<std::uint64_t>(v); }

class Planner {
 public:
  Planner(EvalPlan& p, const PlanOptions& o) : p_(p), opt_(o) {}

  /// Value of `n` in its own element type.
  ValueRef value(const NodePtr& n) {
    if (auto it = memo_.find(n.get()); it != memo_.end()) return it->second;
    ValueRef v = emit(n, n->type, nullptr);
    memo_.emplace(n.get(), v);
    return v;
  }

  /// Value of `n` converted to `out`, with the conversion folded into the
  /// producing kernel whenever that kernel has a two-way form.
  ValueRef emit(const NodePtr& n, ElemType out, const ExprNode* conversion) {
    const ExprNode& node = *n;
    const NodeClass cls = node_class(node.kind);

    if (out != node.type) {
      const bool two_way = elementwise_class(node) || movement_kind(node.kind) || cls == NodeClass::leaf;
      if (!two_way || !opt_.fuse_conversions) return convert_copy(value(n), out, nullptr);
    }

    switch (cls) {
      case NodeClass::leaf: {
        ValueRef v{-1, node.leaf, node.type, node.shape};
        if (out == node.type) return v;
        return convert_copy(v, out, conversion);
      }
      case NodeClass::mtop: {
        const NodePtr& child = node.operands[0];
        const ElemType target = node.aux.target;
        if (out != target) return convert_copy(value(n), out, nullptr);
        if (child->type == target) return value(child);
        if (!opt_.fuse_conversions) return convert_copy(value(child), target, nullptr);
        return emit(child, target, &node);
      }
      case NodeClass::terminal:
        throw std::invalid_argument(std::string(to_string(node.kind)) +
                                    ": evaluated eagerly; cannot be planned as a value");
      case NodeClass::generator:
      case NodeClass::eop:
      case NodeClass::eglue: return elementwise(n, out, conversion);
      default: break;
    }

    if (movement_kind(node.kind)) return movement(n, out, conversion);
    if (node.kind == NodeKind::times) return times(n);
    return reduce_dim(n);
  }

 private:
  int new_slot(std::size_t n_elem, ElemType t) {
    p_.slots.push_back({n_elem, t, -1, -1});
    return static_cast<int>(p_.slots.size()) - 1;
  }

  ValueRef add_step(PlanStep s, Shape shape, const ExprNode* conversion) {
    const int idx = static_cast<int>(p_.steps.size());
    for (const auto& in : s.inputs)
      if (!in.is_leaf()) p_.slots[static_cast<std::size_t>(in.slot)].last_use = idx;
    if (s.outputs.empty()) s.outputs.push_back(new_slot(shape.n_elem(), s.out_type));
    for (int o : s.outputs) p_.slots[static_cast<std::size_t>(o)].producer = idx;
    if (conversion && s.in_type != s.out_type) p_.fused_conversions.push_back({conversion, s.root, idx});
    const ValueRef r{s.outputs[0], {}, s.out_type, shape};
    p_.steps.push_back(std::move(s));
    return r;
  }

  ValueRef convert_copy(const ValueRef& v, ElemType out, const ExprNode* conversion) {
    PlanStep s;
    s.kind = KernelKind::mov_copy;
    s.in_type = v.type;
    s.out_type = out;
    s.inputs = {v};
    s.n_elem = v.shape.n_elem();
    return add_step(std::move(s), v.shape, conversion);
  }

  // --- element-wise regions ---------------------------------------------

  bool inline_in_region(const ExprNode& n, ElemType t, bool is_root) const {
    if (is_root) return true;
    return opt_.fuse_elementwise && elementwise_class(n) && n.type == t && !memo_.contains(&n);
  }

  std::size_t region_ops(const NodePtr& n, ElemType t, bool is_root) const {
    if (!inline_in_region(*n, t, is_root)) return 0;
    std::size_t c = counts_as_op(*n) ? 1 : 0;
    for (const auto& o : n->operands) c += region_ops(o, t, false);
    return c;
  }

  void largest_subtree(const NodePtr& n, ElemType t, bool is_root, NodePtr& best, std::size_t& best_ops) const {
    if (!inline_in_region(*n, t, is_root)) return;
    if (!is_root) {
      const std::size_t c = region_ops(n, t, false);
      if (c > best_ops) {
        best_ops = c;
        best = n;
      }
    }
    for (const auto& o : n->operands) largest_subtree(o, t, false, best, best_ops);
  }

  struct Region {
    FusedProgram prog;
    std::vector<ValueRef> inputs;
    std::map<std::pair<int, std::uint64_t>, std::uint32_t> input_index;
    std::size_t gens = 0;
  };

  void build_program(const NodePtr& n, ElemType t, bool is_root, Region& r) {
    const ExprNode& node = *n;
    if (!inline_in_region(node, t, is_root)) {
      const ValueRef v = value(n);
      const auto key = std::make_pair(v.slot, v.is_leaf() ? v.leaf.buffer_id : 0);
      auto [it, fresh] = r.input_index.emplace(key, static_cast<std::uint32_t>(r.inputs.size()));
      if (fresh) r.inputs.push_back(v);
      r.prog.code.push_back(Instr::load_input(it->second));
      return;
    }
    if (node_class(node.kind) == NodeClass::generator) {
      Instr g;
      g.code = Instr::Code::gen;
      g.k = node.aux.k;
      g.k2 = node.aux.k2;
      g.seed = node.aux.seed;
      g.stream = node.aux.stream;
      g.rows = node.shape.rows;
      g.count = node.shape.n_elem();
      switch (node.kind) {
        case NodeKind::gen_fill: g.gen = GenKind::fill; break;
        case NodeKind::gen_eye: g.gen = GenKind::eye; break;
        case NodeKind::gen_linspace: g.gen = GenKind::linspace; break;
        case NodeKind::gen_randu: g.gen = GenKind::randu; break;
        default: g.gen = GenKind::randn; break;
      }
      if (g.gen == GenKind::eye && g.rows == 0) g.rows = 1;  // empty output; never evaluated
      r.prog.code.push_back(g);
      ++r.gens;
      return;
    }
    for (const auto& o : node.operands) build_program(o, t, false, r);
    const ElemOp op = *elem_op_of(node.kind);
    r.prog.code.push_back(is_binary(op) ? Instr::binary(op) : Instr::unary(op, node.aux.k));
  }

  ValueRef elementwise(const NodePtr& n, ElemType out, const ExprNode* conversion) {
    const ElemType t = n->type;
    while (region_ops(n, t, true) > opt_.max_chain) {
      NodePtr best;
      std::size_t best_ops = 0;
      largest_subtree(n, t, true, best, best_ops);
      if (!best || best_ops == 0) break;
      value(best);
    }

    Region r;
    build_program(n, t, true, r);
    r.prog.n_inputs = static_cast<std::uint32_t>(r.inputs.size());
    const std::size_t ops = r.prog.op_count();

    PlanStep s;
    s.root = n.get();
    s.in_type = t;
    s.out_type = out;
    s.inputs = std::move(r.inputs);
    s.n_elem = n->shape.n_elem();
    if (ops == 0) {
      switch (n->kind) {
        case NodeKind::gen_fill: s.kind = KernelKind::gen_fill; break;
        case NodeKind::gen_eye: s.kind = KernelKind::gen_eye; break;
        case NodeKind::gen_linspace: s.kind = KernelKind::gen_linspace; break;
        case NodeKind::gen_randu: s.kind = KernelKind::gen_randu; break;
        default: s.kind = KernelKind::gen_randn; break;
      }
    } else if (ops == 1 && r.gens == 0) {
      s.kind = kernels::kernel_for(*elem_op_of(n->kind));
    } else {
      s.kind = KernelKind::fused_chain;
    }
    s.program = std::make_shared<const FusedProgram>(std::move(r.prog));
    return add_step(std::move(s), n->shape, conversion);
  }

  // --- structural nodes ----------------------------------------------------

  ValueRef movement(const NodePtr& n, ElemType out, const ExprNode* conversion) {
    const ExprNode& node = *n;
    const ValueRef a = value(node.operands[0]);
    const Shape as = a.shape;
    PlanStep s;
    s.root = n.get();
    s.in_type = a.type;
    s.out_type = out;
    s.inputs = {a};
    s.n_elem = node.shape.n_elem();
    switch (node.kind) {
      case NodeKind::htrans:
        s.kind = KernelKind::mov_transpose;
        s.geom = {as.rows, as.cols};
        break;
      case NodeKind::diagmat: {
        const bool vec = as.rows == 1 || as.cols == 1;
        s.kind = KernelKind::mov_diagmat;
        s.geom = {vec ? 0u : 1u, node.shape.rows, node.shape.cols};
        break;
      }
      case NodeKind::diagvec: {
        const std::int64_t k = node.aux.i[0];
        s.kind = KernelKind::mov_diagvec;
        s.geom = {as.rows, as.cols, k < 0 ? u(-k) : 0u, k > 0 ? u(k) : 0u};
        break;
      }
      case NodeKind::vectorise:
        if (node.aux.i[0] == 0) {
          s.kind = KernelKind::mov_reshape;
          s.geom = {as.n_elem()};
        } else {
          s.kind = KernelKind::mov_transpose;
          s.geom = {as.rows, as.cols};
        }
        break;
      case NodeKind::resize:
        s.kind = KernelKind::mov_resize;
        s.geom = {as.rows, as.cols, node.shape.rows, node.shape.cols};
        break;
      case NodeKind::reshape_copy:
        s.kind = KernelKind::mov_reshape;
        s.geom = {as.n_elem()};
        break;
      case NodeKind::repmat:
        s.kind = KernelKind::gen_repmat;
        s.geom = {as.rows, as.cols, u(node.aux.i[0]), u(node.aux.i[1])};
        break;
      case NodeKind::submat:
        s.kind = KernelKind::mov_extract;
        s.geom = {u(node.aux.i[0]) + u(node.aux.i[1]) * as.rows, u(node.aux.i[2]), 1,
                  u(node.aux.i[3]), as.rows};
        break;
      case NodeKind::join_rows: {
        const ValueRef b = value(node.operands[1]);
        s.inputs.push_back(b);
        s.kind = KernelKind::mov_join_rows;
        s.geom = {as.n_elem(), b.shape.n_elem()};
        break;
      }
      case NodeKind::join_cols: {
        const ValueRef b = value(node.operands[1]);
        s.inputs.push_back(b);
        s.kind = KernelKind::mov_join_cols;
        s.geom = {as.rows, b.shape.rows, as.cols};
        break;
      }
      default: throw std::logic_error("movement: unexpected kind");
    }
    return add_step(std::move(s), node.shape, conversion);
  }

  ValueRef times(const NodePtr& n) {
    const ExprNode& node = *n;
    auto operand = [&](const NodePtr& x, std::uint64_t& flag) {
      if (x->kind == NodeKind::htrans && !memo_.contains(x.get())) {
        flag = 1;
        return value(x->operands[0]);
      }
      flag = 0;
      return value(x);
    };
    std::uint64_t ta = 0, tb = 0;
    const ValueRef a = operand(node.operands[0], ta);
    const ValueRef b = operand(node.operands[1], tb);
    PlanStep s;
    s.root = n.get();
    s.kind = KernelKind::la_gemm;
    s.in_type = s.out_type = node.type;
    s.inputs = {a, b};
    s.n_elem = node.shape.n_elem();
    s.geom = {node.shape.rows, node.shape.cols, node.operands[0]->shape.cols, ta, tb};
    return add_step(std::move(s), node.shape, nullptr);
  }

  ValueRef reduce_dim(const NodePtr& n) {
    const ExprNode& node = *n;
    const ValueRef a = value(node.operands[0]);
    PlanStep s;
    s.root = n.get();
    s.kind = reduce_dim_kernel(node.kind);
    s.in_type = s.out_type = node.type;
    s.inputs = {a};
    s.n_elem = node.shape.n_elem();
    s.geom = {a.shape.rows, a.shape.cols, u(node.aux.i[0])};
    return add_step(std::move(s), node.shape, nullptr);
  }

  EvalPlan& p_;
  const PlanOptions& opt_;
  std::unordered_map<const ExprNode*, ValueRef> memo_;
};

}  // namespace

EvalPlan plan(const Expr& expr, ElemType out_type, const PlanOptions& opts) {
  EvalPlan p;
  p.shape = expr.shape();
  p.out_type = out_type;
  Planner planner(p, opts);
  p.result = planner.emit(expr.node(), out_type, nullptr);
  return p;
}

std::string EvalPlan::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    os << i << ": " << kernels::to_string(s.kind) << " " << to_string(s.in_type) << "->"
       << to_string(s.out_type) << " n=" << s.n_elem << " in=[";
    for (const auto& v : s.inputs) {
      if (v.is_leaf())
        os << " leaf#" << v.leaf.buffer_id;
      else
        os << " t" << v.slot;
    }
    os << " ] out=t" << s.outputs[0];
    if (s.program) os << " {" << s.program->describe() << "}";
    os << '\n';
  }
  return os.str();
}

}  // namespace qk
