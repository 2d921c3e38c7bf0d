// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "quokka/expr/plan.hpp"
#include "quokka/runtime/runtime.hpp"
#include "quokka/tensor/matrix.hpp"

namespace qk {

namespace {

/// Releases temporaries on every exit path.
struct SlotBuffers {
  std::vector<DeviceBuffer> bufs;
  std::vector<bool> owned;
  ~SlotBuffers() {
    auto& rt = Runtime::get();
    for (std::size_t i = 0; i < bufs.size(); ++i)
      if (owned[i] && bufs[i].valid()) rt.release(bufs[i]);
  }
};

}  // namespace

void evaluate(const Expr& e, Matrix& out, const PlanOptions& opts) {
  auto& rt = Runtime::get();
  const Shape shape = e.shape();
  out.check_orientation(shape.rows, shape.cols);
  const ElemType type = out.type_;
  if (shape.n_elem() == 0) {
    // nothing to compute; keep a zero-length buffer so the type is tracked
    if (!(out.mem_.valid() && out.mem_.length == 0 && out.mem_.elem_type == type))
      out.adopt(rt.acquire_memory(0, type), shape.rows, shape.cols);
    else
      out.set_shape(shape.rows, shape.cols);
    return;
  }
  EvalPlan p = plan(e, type, opts);

  if (p.result.is_leaf()) {
    const DeviceBuffer& src = p.result.leaf;
    if (src.buffer_id == out.mem_.buffer_id && out.shape() == shape) return;
    DeviceBuffer dst = rt.acquire_memory(shape.n_elem(), type);
    try {
      rt.copy_device(src, 0, dst, 0, shape.n_elem());
    } catch (...) {
      rt.release(dst);
      throw;
    }
    out.adopt(dst, shape.rows, shape.cols);
    return;
  }

  const int result_slot = p.result.slot;
  const int final_step = p.slots[static_cast<std::size_t>(result_slot)].producer;

  // Write the final kernel straight into the output's storage when that is
  // safe: element-wise kernels are pure per-element maps, so reading and
  // writing the same buffer in one pass has no hazard.
  bool reads_out = false;
  for (const auto& s : p.steps)
    for (const auto& in : s.inputs)
      if (in.is_leaf() && out.mem_.valid() && in.leaf.buffer_id == out.mem_.buffer_id) reads_out = true;
  const bool fits = out.mem_.valid() && out.mem_.length == shape.n_elem() && out.mem_.elem_type == type;
  const bool final_elementwise = kernels::is_elementwise(p.steps[static_cast<std::size_t>(final_step)].kind);
  const bool in_place = fits && (!reads_out || final_elementwise);

  SlotBuffers slots;
  slots.bufs.resize(p.slots.size());
  slots.owned.assign(p.slots.size(), true);
  if (in_place) {
    slots.bufs[static_cast<std::size_t>(result_slot)] = out.mem_;
    slots.owned[static_cast<std::size_t>(result_slot)] = false;
  }

  auto resolve = [&](const ValueRef& v) {
    return v.is_leaf() ? v.leaf : slots.bufs[static_cast<std::size_t>(v.slot)];
  };

  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const PlanStep& s = p.steps[i];
    KernelInvocation inv;
    inv.kind = s.kind;
    inv.in_type = s.in_type;
    inv.out_type = s.out_type;
    for (const auto& in : s.inputs) inv.inputs.push_back(resolve(in));
    for (int o : s.outputs) {
      auto& b = slots.bufs[static_cast<std::size_t>(o)];
      if (!b.valid()) b = rt.acquire_memory(p.slots[static_cast<std::size_t>(o)].n_elem, p.slots[static_cast<std::size_t>(o)].type);
      inv.outputs.push_back(b);
    }
    inv.scalars = s.scalars;
    inv.geom = s.geom;
    inv.n_elem = s.n_elem;
    inv.program = s.program;
    rt.enqueue(std::move(inv));

    // Queued work keeps storage alive, so temporaries can be released as soon
    // as their last reader has been enqueued.
    for (std::size_t k = 0; k < p.slots.size(); ++k) {
      if (static_cast<int>(k) == result_slot) continue;
      const auto& ts = p.slots[k];
      const int done = std::max(ts.producer, ts.last_use);
      if (done == static_cast<int>(i) && slots.bufs[k].valid()) {
        rt.release(slots.bufs[k]);
        slots.bufs[k] = {};
      }
    }
  }

  if (in_place) {
    out.set_shape(shape.rows, shape.cols);
  } else {
    DeviceBuffer r = slots.bufs[static_cast<std::size_t>(result_slot)];
    slots.owned[static_cast<std::size_t>(result_slot)] = false;
    out.adopt(r, shape.rows, shape.cols);
  }
}

}  // namespace qk
