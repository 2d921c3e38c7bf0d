// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "quokka/runtime/types.hpp"

namespace qk {

namespace detail {
class Device;
struct BufferTable;
}  // namespace detail

/// Process-wide runtime: device registry, command queue, memory pool, kernel
/// cache and instrumentation. Every device interaction in the library goes
/// through this object.
class Runtime {
 public:
  static Runtime& get();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;
  ~Runtime();

  /// Select and initialise a device. Fails if already initialised.
  void init(const RuntimeOptions& opts);
  /// Drain, drop all buffers and stop the device so init() may be called again.
  void shutdown();
  bool initialized() const;
  /// Initialise with automatic selection if nothing has been selected yet.
  void ensure_initialized();

  DeviceDescriptor device();

  DeviceBuffer acquire_memory(std::size_t n_elem, ElemType type);
  void release(const DeviceBuffer& buf);
  std::size_t live_buffers() const;

  void enqueue(KernelInvocation inv);
  void synchronise();

  /// Device -> host. Drains the queue first.
  void copy_to_host(const DeviceBuffer& src, std::size_t offset, std::span<std::byte> dst);
  /// Host -> device.
  void copy_from_host(std::span<const std::byte> src, const DeviceBuffer& dst, std::size_t offset);
  /// Device -> device, ordered with queued kernels.
  void copy_device(const DeviceBuffer& src, std::size_t src_offset, const DeviceBuffer& dst,
                   std::size_t dst_offset, std::size_t n_elem);

  Counters counters_snapshot() const;

  void set_seed(std::uint64_t seed);
  std::uint64_t seed() const;
  /// Fresh RNG stream id for one generator call.
  std::uint64_t next_stream();

  bool kernel_available(const kernels::KernelSignature& sig) const;
  std::size_t kernel_inventory_size() const;
  std::string cache_dir() const;
  std::vector<std::string> warnings() const;

 private:
  Runtime();

  void init_locked(const RuntimeOptions& opts);
  void check_types(ElemType t) const;
  void add_warning(std::string w);

  mutable std::mutex mutex_;
  mutable std::mutex counters_mutex_;
  Counters counters_;
  std::unique_ptr<detail::Device> device_;
  std::unique_ptr<detail::BufferTable> buffers_;
  DeviceDescriptor descriptor_;
  std::vector<kernels::KernelSignature> compiled_;
  std::string cache_dir_;
  std::vector<std::string> warnings_;
  std::uint64_t seed_ = 0;
  std::uint64_t next_stream_ = 0;

  friend struct RuntimeAccess;
};

/// Free-function conveniences over Runtime::get().
void init(std::string_view backend, bool print_info = false, int device_id = 0,
          std::size_t worker_count = 0);
void synchronise();
void set_seed(std::uint64_t seed);

}  // namespace qk
