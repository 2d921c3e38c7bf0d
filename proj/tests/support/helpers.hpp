// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "quokka/oracle/tree_walk.hpp"
#include "quokka/quokka.hpp"

namespace qk::testing {

/// Re-initialises the runtime on the requested device.
inline void use_backend(const std::string& backend, int device = 0, std::size_t workers = 0) {
  auto& rt = Runtime::get();
  if (rt.initialized()) rt.shutdown();
  RuntimeOptions o;
  o.backend = backend;
  o.device_id = device;
  o.worker_count = workers;
  rt.init(o);
}

inline void ensure_backend(const std::string& backend = "reference") {
  auto& rt = Runtime::get();
  if (!rt.initialized() || rt.device().backend_name != backend) use_backend(backend);
}

/// Counter delta since construction.
class CounterWatch {
 public:
  CounterWatch() : start_(Runtime::get().counters_snapshot()) {}
  Counters delta() const { return Runtime::get().counters_snapshot() - start_; }

 private:
  Counters start_;
};

/// max |a - b| / max(max |b|, 1e-300). NaN in the same position on both sides
/// counts as equal; shape or type mismatch yields +inf.
inline double rel_diff(const HostMatrix& a, const HostMatrix& b) {
  if (a.n_rows != b.n_rows || a.n_cols != b.n_cols) return INFINITY;
  double num = 0, den = 0;
  for (uword i = 0; i < a.n_elem(); ++i) {
    const double x = a.get(i), y = b.get(i);
    if (std::isnan(x) && std::isnan(y)) continue;
    if (x == y) {
      den = std::max(den, std::abs(y));
      continue;
    }
    if (std::isnan(x) || std::isnan(y) || std::isinf(x) || std::isinf(y)) return INFINITY;
    num = std::max(num, std::abs(x - y));
    den = std::max(den, std::abs(y));
  }
  return num == 0 ? 0 : num / std::max(den, 1e-300);
}

inline bool bit_equal(const HostMatrix& a, const HostMatrix& b) {
  if (a.n_rows != b.n_rows || a.n_cols != b.n_cols || a.elem_type != b.elem_type) return false;
  return std::memcmp(a.bytes(), b.bytes(), a.n_elem() * elem_size(a.elem_type)) == 0;
}

/// Oracle tolerance by element type: exact for integers.
inline double oracle_tol(ElemType t) {
  switch (t) {
    case ElemType::f32: return 1e-5;
    case ElemType::f64: return 1e-12;
    default: return 0;
  }
}

inline HostMatrix host(const Expr& e) { return Matrix(e).to_host(); }

/// Frobenius norm computed on the host in double.
inline double host_fro(const HostMatrix& h) {
  double s = 0;
  for (uword i = 0; i < h.n_elem(); ++i) s += h.get(i) * h.get(i);
  return std::sqrt(s);
}

inline double host_fro_diff(const HostMatrix& a, const HostMatrix& b) {
  double s = 0;
  for (uword i = 0; i < a.n_elem(); ++i) {
    const double d = a.get(i) - b.get(i);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace qk::testing
