// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "quokka/runtime/types.hpp"

namespace qk::kernels {

/// Fixed block size for deterministic reductions. The combination order of
/// partial results depends only on (n_elem, kReduceBlock), never on workers.
inline constexpr std::size_t kReduceBlock = 4096;

/// A device buffer bound to storage for the duration of one kernel.
struct BoundBuffer {
  std::byte* data = nullptr;
  std::size_t length = 0;
  ElemType type = ElemType::f32;

  template <Element T> T* as() const noexcept { return reinterpret_cast<T*>(data); }
};

struct BoundArgs {
  std::vector<BoundBuffer> in;
  std::vector<BoundBuffer> out;
};

/// Executable form of an invocation. Devices run `prologue` once, then split
/// `[0, work_items)` across workers calling `body`, then run `epilogue` once.
/// Kernels are written so results never depend on how the range is split.
struct KernelTask {
  std::size_t work_items = 0;
  std::function<void()> prologue;
  std::function<void(std::size_t, std::size_t)> body;
  std::function<void()> epilogue;
};

/// Checks buffer counts, lengths and geometry. Throws std::invalid_argument.
void validate(const KernelInvocation& inv);

/// Binds an invocation to storage. The returned task references `args`.
KernelTask prepare(const KernelInvocation& inv, const BoundArgs& args);

/// Bound storage pointer arithmetic for validation: elements a kernel touches
/// in each input/output, given the invocation geometry.
struct Footprint {
  std::vector<std::size_t> in;
  std::vector<std::size_t> out;
};
Footprint footprint(const KernelInvocation& inv);

}  // namespace qk::kernels
