// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "quokka/elem_type.hpp"
#include "quokka/kernels/fused_program.hpp"
#include "quokka/kernels/kernel_kind.hpp"

namespace qk {

/// Raised when an element type is not supported by the active device.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid backend selection or runtime (re)initialisation.
class RuntimeInitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DeviceDescriptor {
  std::string backend_name;
  int device_id = 0;
  std::size_t worker_count = 1;
  bool supports_f64 = true;
  std::uint64_t descriptor_hash = 0;

  std::string summary() const;
};

/// Stable digest of every descriptor field plus the library version.
std::uint64_t compute_descriptor_hash(const DeviceDescriptor& d, std::string_view version);

/// Opaque handle to a device-resident typed array.
struct DeviceBuffer {
  int device_id = -1;
  std::uint64_t buffer_id = 0;
  std::size_t length = 0;
  ElemType elem_type = ElemType::f32;

  bool valid() const noexcept { return buffer_id != 0; }
  std::size_t bytes() const noexcept { return length * elem_size(elem_type); }
  friend bool operator==(const DeviceBuffer&, const DeviceBuffer&) = default;
};

struct Counters {
  std::uint64_t launches = 0;
  std::uint64_t compiles = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t transfers_h2d = 0;
  std::uint64_t transfers_d2h = 0;
  std::uint64_t bytes_h2d = 0;
  std::uint64_t bytes_d2h = 0;
  std::uint64_t buffers_acquired = 0;
  std::uint64_t buffers_released = 0;

  Counters operator-(const Counters& o) const noexcept {
    return {launches - o.launches,           compiles - o.compiles,
            cache_hits - o.cache_hits,       transfers_h2d - o.transfers_h2d,
            transfers_d2h - o.transfers_d2h, bytes_h2d - o.bytes_h2d,
            bytes_d2h - o.bytes_d2h,         buffers_acquired - o.buffers_acquired,
            buffers_released - o.buffers_released};
  }
  friend bool operator==(const Counters&, const Counters&) = default;
};

/// One kernel launch. Geometry words are kernel-specific (offsets, strides,
/// row/column counts, step indices).
struct KernelInvocation {
  kernels::KernelKind kind = kernels::KernelKind::mov_copy;
  ElemType in_type = ElemType::f32;
  ElemType out_type = ElemType::f32;
  std::vector<DeviceBuffer> inputs;
  std::vector<DeviceBuffer> outputs;
  std::vector<double> scalars;
  std::array<std::uint64_t, 8> geom{};
  std::uint64_t n_elem = 0;
  std::shared_ptr<const kernels::FusedProgram> program;
};

struct RuntimeOptions {
  std::string backend;  ///< "reference", "parallel", or empty for automatic selection
  bool print_info = false;
  int device_id = 0;
  std::size_t worker_count = 0;  ///< parallel backend only; 0 = hardware concurrency
  std::string cache_dir;         ///< empty = $KERNEL_CACHE_DIR or ~/.quokka
  std::string library_version;   ///< empty = the built-in version
};

}  // namespace qk
