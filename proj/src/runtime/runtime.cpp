// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/runtime/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <exception>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "quokka/hash.hpp"
#include "quokka/kernels/kernel_set.hpp"
#include "quokka/runtime/kernel_cache.hpp"

namespace qk {

std::string DeviceDescriptor::summary() const {
  std::ostringstream os;
  os << "quokka " << library_version << ": backend=" << backend_name << " device=" << device_id
     << " workers=" << worker_count << " f64=" << (supports_f64 ? "yes" : "no")
     << " descriptor=" << to_hex16(descriptor_hash);
  return os.str();
}

std::uint64_t compute_descriptor_hash(const DeviceDescriptor& d, std::string_view version) {
  std::string key = d.backend_name;
  key += '\x1f';
  key += std::to_string(d.device_id);
  key += '\x1f';
  key += std::to_string(d.worker_count);
  key += '\x1f';
  key += d.supports_f64 ? '1' : '0';
  key += '\x1f';
  key += version;
  return fnv1a64(key);
}

namespace detail {

using Storage = std::shared_ptr<std::vector<std::byte>>;

/// One unit of queued device work: either a kernel or a plain device-side action.
struct Job {
  std::vector<Storage> hold;  // keeps storage alive even if buffers are released meanwhile
  kernels::BoundArgs args;
  KernelInvocation inv;
  std::function<void()> action;
};

std::size_t grain_for(kernels::KernelKind k) {
  using K = kernels::KernelKind;
  if (kernels::is_elementwise(k)) return 4096;
  switch (k) {
    case K::mov_copy:
    case K::mov_reshape:
    case K::mov_join_rows:
    case K::mov_diagvec: return 4096;
    default: return 1;
  }
}

class Device {
 public:
  virtual ~Device() = default;
  virtual void submit(Job job) = 0;
  virtual void drain() = 0;
};

class ReferenceDevice final : public Device {
 public:
  void submit(Job job) override {
    std::lock_guard lk(mu_);
    if (job.action) {
      job.action();
      return;
    }
    auto task = kernels::prepare(job.inv, job.args);
    if (task.prologue) task.prologue();
    if (task.body && task.work_items > 0) task.body(0, task.work_items);
    if (task.epilogue) task.epilogue();
  }
  void drain() override { std::lock_guard lk(mu_); }

 private:
  std::mutex mu_;
};

/// FIFO command queue drained by a dispatcher thread. Each kernel's body range
/// is split into contiguous chunks run by the dispatcher plus worker threads.
class ParallelDevice final : public Device {
 public:
  explicit ParallelDevice(std::size_t workers) : workers_(std::max<std::size_t>(workers, 1)) {
    for (std::size_t w = 1; w < workers_; ++w) pool_.emplace_back([this, w] { worker_loop(w); });
    dispatcher_ = std::thread([this] { dispatch_loop(); });
  }

  ~ParallelDevice() override {
    {
      std::lock_guard lk(qmu_);
      stop_ = true;
    }
    qcv_.notify_all();
    dispatcher_.join();
    {
      std::lock_guard lk(pmu_);
      pool_stop_ = true;
    }
    pcv_.notify_all();
    for (auto& t : pool_) t.join();
  }

  void submit(Job job) override {
    {
      std::lock_guard lk(qmu_);
      queue_.push_back(std::move(job));
      ++pending_;
    }
    qcv_.notify_all();
  }

  void drain() override {
    std::unique_lock lk(qmu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    if (error_) {
      auto e = std::exchange(error_, nullptr);
      std::rethrow_exception(e);
    }
  }

 private:
  void dispatch_loop() {
    for (;;) {
      Job job;
      {
        std::unique_lock lk(qmu_);
        qcv_.wait(lk, [this] { return stop_ || !queue_.empty(); });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      try {
        execute(job);
      } catch (...) {
        std::lock_guard lk(qmu_);
        if (!error_) error_ = std::current_exception();
      }
      job = Job{};
      {
        std::lock_guard lk(qmu_);
        --pending_;
      }
      done_cv_.notify_all();
    }
  }

  void execute(Job& job) {
    if (job.action) {
      job.action();
      return;
    }
    auto task = kernels::prepare(job.inv, job.args);
    if (task.prologue) task.prologue();
    if (task.body && task.work_items > 0) {
      const std::size_t grain = grain_for(job.inv.kind);
      const std::size_t chunks =
          std::min(workers_, (task.work_items + grain - 1) / grain);
      if (chunks <= 1) {
        task.body(0, task.work_items);
      } else {
        run_split(task, chunks);
      }
    }
    if (task.epilogue) task.epilogue();
  }

  void run_split(const kernels::KernelTask& task, std::size_t chunks) {
    const std::size_t n = task.work_items;
    auto range = [n, chunks](std::size_t c) {
      return std::pair{n * c / chunks, n * (c + 1) / chunks};
    };
    {
      std::lock_guard lk(pmu_);
      body_ = &task.body;
      chunks_ = chunks;
      range_n_ = n;
      remaining_ = chunks - 1;
      ++generation_;
    }
    pcv_.notify_all();
    const auto [b, e] = range(0);
    task.body(b, e);
    std::unique_lock lk(pmu_);
    pdone_cv_.wait(lk, [this] { return remaining_ == 0; });
    body_ = nullptr;
  }

  void worker_loop(std::size_t w) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t, std::size_t)>* body;
      std::size_t chunks, n;
      {
        std::unique_lock lk(pmu_);
        pcv_.wait(lk, [&] { return pool_stop_ || generation_ != seen; });
        if (pool_stop_) return;
        seen = generation_;
        if (w >= chunks_) continue;
        body = body_;
        chunks = chunks_;
        n = range_n_;
      }
      (*body)(n * w / chunks, n * (w + 1) / chunks);
      {
        std::lock_guard lk(pmu_);
        --remaining_;
      }
      pdone_cv_.notify_all();
    }
  }

  const std::size_t workers_;

  std::mutex qmu_;
  std::condition_variable qcv_, done_cv_;
  std::deque<Job> queue_;
  std::size_t pending_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
  std::thread dispatcher_;

  std::mutex pmu_;
  std::condition_variable pcv_, pdone_cv_;
  std::vector<std::thread> pool_;
  const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
  std::size_t chunks_ = 0, range_n_ = 0, remaining_ = 0;
  std::uint64_t generation_ = 0;
  bool pool_stop_ = false;
};

struct BufferEntry {
  Storage data;
  std::size_t length = 0;
  ElemType type = ElemType::f32;
};

struct BufferTable {
  std::unordered_map<std::uint64_t, BufferEntry> live;
  std::unordered_set<std::uint64_t> retired;  // dropped by shutdown(); later release is a no-op
};

}  // namespace detail

namespace {

std::atomic<std::uint64_t> next_buffer_id{1};

[[noreturn]] void fault(const std::string& what) {
  std::fprintf(stderr, "quokka: fatal: %s\n", what.c_str());
  std::fflush(stderr);
  std::abort();
}

std::uint64_t seed_from_env() {
  if (const char* s = std::getenv("RNG_SEED"); s && *s) {
    char* end = nullptr;
    const auto v = std::strtoull(s, &end, 10);
    if (end && *end == '\0') return v;
  }
  return 0;
}

}  // namespace

Runtime& Runtime::get() {
  static Runtime rt;
  return rt;
}

Runtime::Runtime() : buffers_(std::make_unique<detail::BufferTable>()), seed_(seed_from_env()) {}

Runtime::~Runtime() {
  try {
    shutdown();
  } catch (...) {
  }
}

void Runtime::init(const RuntimeOptions& opts) {
  std::lock_guard lk(mutex_);
  init_locked(opts);
}

void Runtime::init_locked(const RuntimeOptions& opts) {
  if (device_) throw RuntimeInitError("runtime is already initialised; device initialisation fails on a second init");

  std::string backend = opts.backend;
  bool automatic = false;
  if (backend.empty()) {
    const char* env = std::getenv("DEFAULT_BACKEND");
    backend = env && *env ? env : "parallel";
    automatic = !(env && *env);
  }
  if (backend != "reference" && backend != "parallel")
    throw RuntimeInitError("unknown backend '" + backend + "'; valid backends: reference, parallel");

  const int max_id = backend == "parallel" ? 1 : 0;
  if (opts.device_id < 0 || opts.device_id > max_id)
    throw RuntimeInitError("device id " + std::to_string(opts.device_id) + " out of range for backend '" +
                           backend + "' (0.." + std::to_string(max_id) + ")");

  DeviceDescriptor d;
  d.backend_name = backend;
  d.device_id = opts.device_id;
  d.supports_f64 = !(backend == "parallel" && opts.device_id == 1);
  if (backend == "parallel") {
    d.worker_count = opts.worker_count != 0
                         ? opts.worker_count
                         : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  } else {
    d.worker_count = 1;
  }
  const std::string version =
      opts.library_version.empty() ? std::string(library_version) : opts.library_version;
  d.descriptor_hash = compute_descriptor_hash(d, version);

  std::unique_ptr<detail::Device> dev;
  if (backend == "parallel") {
    try {
      dev = std::make_unique<detail::ParallelDevice>(d.worker_count);
    } catch (const std::system_error&) {
      if (!automatic) throw;
      d.backend_name = "reference";
      d.device_id = 0;
      d.worker_count = 1;
      d.supports_f64 = true;
      d.descriptor_hash = compute_descriptor_hash(d, version);
    }
  }
  if (!dev) dev = std::make_unique<detail::ReferenceDevice>();

  warnings_.clear();
  cache_dir_ = opts.cache_dir.empty() ? default_cache_dir().string() : opts.cache_dir;

  // "Compile" the inventory: generate each kernel's source and hash it, reusing
  // cached hashes recorded for this exact device descriptor.
  auto inv = kernels::inventory(d.supports_f64);
  std::sort(inv.begin(), inv.end());
  ManifestLoad loaded = kernel_cache_load(cache_dir_);
  if (!loaded.warning.empty()) add_warning(loaded.warning);

  std::map<kernels::KernelSignature, std::uint64_t> cached;
  std::vector<KernelCacheEntry> keep;
  for (const auto& e : loaded.entries) {
    if (e.descriptor_hash == d.descriptor_hash)
      cached[e.sig] = e.source_hash;
    else
      keep.push_back(e);
  }

  std::vector<KernelCacheEntry> fresh;
  fresh.reserve(inv.size());
  for (const auto& sig : inv) fresh.push_back({d.descriptor_hash, sig, fnv1a64(kernels::source_text(sig))});

  std::size_t hits = 0;
  for (const auto& e : fresh) {
    auto it = cached.find(e.sig);
    if (it != cached.end() && it->second == e.source_hash) ++hits;
  }
  if (!cached.empty() && (hits != fresh.size() || cached.size() != fresh.size())) {
    add_warning("kernel cache in " + cache_dir_ + " is incomplete for this device; starting cold");
    hits = 0;
  }
  const std::size_t compiles = hits == fresh.size() ? 0 : fresh.size();
  if (compiles > 0) {
    keep.insert(keep.end(), fresh.begin(), fresh.end());
    try {
      kernel_cache_store(cache_dir_, std::move(keep));
    } catch (const std::exception& ex) {
      add_warning(std::string("could not write kernel cache: ") + ex.what());
    }
  }
  {
    std::lock_guard clk(counters_mutex_);
    counters_.compiles += compiles;
    counters_.cache_hits += compiles == 0 ? hits : 0;
  }

  compiled_ = std::move(inv);
  descriptor_ = d;
  device_ = std::move(dev);
  if (opts.print_info) std::cout << descriptor_.summary() << std::endl;
}

void Runtime::shutdown() {
  std::unique_ptr<detail::Device> dev;
  {
    std::lock_guard lk(mutex_);
    if (!device_) return;
    dev = std::move(device_);
  }
  try {
    dev->drain();
  } catch (...) {
  }
  dev.reset();
  std::lock_guard lk(mutex_);
  {
    std::lock_guard clk(counters_mutex_);
    counters_.buffers_released += buffers_->live.size();
  }
  for (const auto& [id, e] : buffers_->live) buffers_->retired.insert(id);
  buffers_->live.clear();
  compiled_.clear();
  descriptor_ = {};
}

bool Runtime::initialized() const {
  std::lock_guard lk(mutex_);
  return device_ != nullptr;
}

void Runtime::ensure_initialized() {
  std::lock_guard lk(mutex_);
  if (!device_) init_locked({});
}

DeviceDescriptor Runtime::device() {
  ensure_initialized();
  std::lock_guard lk(mutex_);
  return descriptor_;
}

void Runtime::check_types(ElemType t) const {
  if (t == ElemType::f64 && !descriptor_.supports_f64)
    throw PrecisionError("precision-unsupported: device " + std::to_string(descriptor_.device_id) +
                         " of backend '" + descriptor_.backend_name +
                         "' does not support 64-bit floating point");
}

DeviceBuffer Runtime::acquire_memory(std::size_t n_elem, ElemType type) {
  std::lock_guard lk(mutex_);
  if (!device_) init_locked({});
  check_types(type);
  detail::BufferEntry e;
  e.data = std::make_shared<std::vector<std::byte>>(n_elem * elem_size(type));
  e.length = n_elem;
  e.type = type;
  const std::uint64_t id = next_buffer_id.fetch_add(1);
  buffers_->live.emplace(id, std::move(e));
  {
    std::lock_guard clk(counters_mutex_);
    ++counters_.buffers_acquired;
  }
  return {descriptor_.device_id, id, n_elem, type};
}

void Runtime::release(const DeviceBuffer& buf) {
  if (!buf.valid()) return;
  std::lock_guard lk(mutex_);
  if (buffers_->live.erase(buf.buffer_id) == 1) {
    std::lock_guard clk(counters_mutex_);
    ++counters_.buffers_released;
    return;
  }
  if (buffers_->retired.erase(buf.buffer_id) == 1) return;
  fault("release of buffer " + std::to_string(buf.buffer_id) + " which is not live (double release)");
}

std::size_t Runtime::live_buffers() const {
  std::lock_guard lk(mutex_);
  return buffers_->live.size();
}

namespace {

const detail::BufferEntry& lookup(const detail::BufferTable& t, const DeviceBuffer& b, int device_id) {
  auto it = t.live.find(b.buffer_id);
  if (it == t.live.end())
    fault("use of released or unknown device buffer " + std::to_string(b.buffer_id));
  if (b.device_id != device_id)
    throw std::invalid_argument("buffer " + std::to_string(b.buffer_id) + " belongs to device " +
                                std::to_string(b.device_id) + ", not the active device " +
                                std::to_string(device_id));
  return it->second;
}

}  // namespace

void Runtime::enqueue(KernelInvocation inv) {
  std::lock_guard lk(mutex_);
  if (!device_) init_locked({});
  check_types(inv.in_type);
  check_types(inv.out_type);
  const kernels::KernelSignature sig{inv.kind, inv.in_type, inv.out_type};
  if (!std::binary_search(compiled_.begin(), compiled_.end(), sig))
    throw std::invalid_argument("no compiled kernel " + std::string(kernels::to_string(inv.kind)) + " (" +
                                std::string(to_string(inv.in_type)) + " -> " +
                                std::string(to_string(inv.out_type)) + ")");

  detail::Job job;
  auto bind = [&](const DeviceBuffer& b, std::vector<kernels::BoundBuffer>& dst) {
    const auto& e = lookup(*buffers_, b, descriptor_.device_id);
    job.hold.push_back(e.data);
    dst.push_back({e.data->data(), e.length, e.type});
  };
  for (const auto& b : inv.inputs) bind(b, job.args.in);
  for (const auto& b : inv.outputs) bind(b, job.args.out);
  kernels::validate(inv);
  job.inv = std::move(inv);
  {
    std::lock_guard clk(counters_mutex_);
    ++counters_.launches;
  }
  device_->submit(std::move(job));
}

void Runtime::synchronise() {
  std::lock_guard lk(mutex_);
  if (device_) device_->drain();
}

void Runtime::copy_to_host(const DeviceBuffer& src, std::size_t offset, std::span<std::byte> dst) {
  std::lock_guard lk(mutex_);
  if (!device_) init_locked({});
  const auto& e = lookup(*buffers_, src, descriptor_.device_id);
  const std::size_t esz = elem_size(e.type);
  if (offset * esz + dst.size() > e.data->size())
    throw std::out_of_range("device->host copy past the end of buffer " + std::to_string(src.buffer_id));
  device_->drain();
  if (!dst.empty()) std::memcpy(dst.data(), e.data->data() + offset * esz, dst.size());
  std::lock_guard clk(counters_mutex_);
  ++counters_.transfers_d2h;
  counters_.bytes_d2h += dst.size();
}

void Runtime::copy_from_host(std::span<const std::byte> src, const DeviceBuffer& dst, std::size_t offset) {
  std::lock_guard lk(mutex_);
  if (!device_) init_locked({});
  const auto& e = lookup(*buffers_, dst, descriptor_.device_id);
  const std::size_t esz = elem_size(e.type);
  if (offset * esz + src.size() > e.data->size())
    throw std::out_of_range("host->device copy past the end of buffer " + std::to_string(dst.buffer_id));
  device_->drain();
  if (!src.empty()) std::memcpy(e.data->data() + offset * esz, src.data(), src.size());
  std::lock_guard clk(counters_mutex_);
  ++counters_.transfers_h2d;
  counters_.bytes_h2d += src.size();
}

void Runtime::copy_device(const DeviceBuffer& src, std::size_t src_offset, const DeviceBuffer& dst,
                          std::size_t dst_offset, std::size_t n_elem) {
  std::lock_guard lk(mutex_);
  if (!device_) init_locked({});
  const auto& s = lookup(*buffers_, src, descriptor_.device_id);
  const auto& d = lookup(*buffers_, dst, descriptor_.device_id);
  if (s.type != d.type) throw std::invalid_argument("device copy between different element types");
  if (src_offset + n_elem > s.length || dst_offset + n_elem > d.length)
    throw std::out_of_range("device copy range exceeds buffer length");
  const std::size_t esz = elem_size(s.type);
  detail::Job job;
  job.hold = {s.data, d.data};
  job.action = [sp = s.data.get(), dp = d.data.get(), so = src_offset * esz, dof = dst_offset * esz,
                nb = n_elem * esz] {
    if (nb) std::memmove(dp->data() + dof, sp->data() + so, nb);
  };
  device_->submit(std::move(job));
}

Counters Runtime::counters_snapshot() const {
  std::lock_guard clk(counters_mutex_);
  return counters_;
}

void Runtime::set_seed(std::uint64_t seed) {
  std::lock_guard lk(mutex_);
  seed_ = seed;
  next_stream_ = 0;
}

std::uint64_t Runtime::seed() const {
  std::lock_guard lk(mutex_);
  return seed_;
}

std::uint64_t Runtime::next_stream() {
  std::lock_guard lk(mutex_);
  return next_stream_++;
}

bool Runtime::kernel_available(const kernels::KernelSignature& sig) const {
  std::lock_guard lk(mutex_);
  return std::binary_search(compiled_.begin(), compiled_.end(), sig);
}

std::size_t Runtime::kernel_inventory_size() const {
  std::lock_guard lk(mutex_);
  return compiled_.size();
}

std::string Runtime::cache_dir() const {
  std::lock_guard lk(mutex_);
  return cache_dir_;
}

std::vector<std::string> Runtime::warnings() const {
  std::lock_guard lk(mutex_);
  return warnings_;
}

void Runtime::add_warning(std::string w) {
  std::cerr << "quokka: warning: " << w << '\n';
  warnings_.push_back(std::move(w));
}

void init(std::string_view backend, bool print_info, int device_id, std::size_t worker_count) {
  RuntimeOptions o;
  o.backend = std::string(backend);
  o.print_info = print_info;
  o.device_id = device_id;
  o.worker_count = worker_count;
  Runtime::get().init(o);
}

void synchronise() { Runtime::get().synchronise(); }

void set_seed(std::uint64_t seed) { Runtime::get().set_seed(seed); }

}  // namespace qk
