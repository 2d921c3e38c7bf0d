// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/kernels/kernel_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "quokka/elem_ops.hpp"

namespace qk::kernels {

namespace {

using K = KernelKind;

template <class T>
using acc_t = std::conditional_t<std::is_same_v<T, std::int32_t>, std::int64_t, T>;

template <class F> decltype(auto) visit2(ElemType a, ElemType b, F&& f) {
  return visit_elem_type(a, [&](auto ta) {
    return visit_elem_type(b, [&](auto tb) { return f(ta, tb); });
  });
}

std::size_t g(const KernelInvocation& inv, std::size_t i) {
  return static_cast<std::size_t>(inv.geom[i]);
}

[[noreturn]] void bad(const KernelInvocation& inv, const std::string& what) {
  throw std::invalid_argument(std::string(to_string(inv.kind)) + ": " + what);
}

// ---------------------------------------------------------------------------
// element-wise programs

constexpr std::size_t kChunk = 256;

template <Element T, Element Out>
void run_program(const FusedProgram& p, const BoundArgs& a, std::size_t begin, std::size_t end) {
  std::vector<T> regs(std::max<std::size_t>(p.max_stack(), 1) * kChunk);
  std::vector<const T*> inputs;
  inputs.reserve(a.in.size());
  for (const auto& b : a.in) inputs.push_back(b.as<T>());
  Out* out = a.out[0].as<Out>();

  for (std::size_t base = begin; base < end; base += kChunk) {
    const std::size_t len = std::min(kChunk, end - base);
    std::size_t sp = 0;
    for (const Instr& ins : p.code) {
      switch (ins.code) {
        case Instr::Code::load: {
          std::copy_n(inputs[ins.input] + base, len, regs.data() + sp * kChunk);
          ++sp;
          break;
        }
        case Instr::Code::gen: {
          T* r = regs.data() + sp * kChunk;
          for (std::size_t j = 0; j < len; ++j) r[j] = generator_value<T>(ins, base + j);
          ++sp;
          break;
        }
        case Instr::Code::unary: {
          T* r = regs.data() + (sp - 1) * kChunk;
          with_unary<T>(ins.op, ins.k, [&](auto fn) {
            for (std::size_t j = 0; j < len; ++j) r[j] = fn(r[j]);
          });
          break;
        }
        case Instr::Code::binary: {
          T* x = regs.data() + (sp - 2) * kChunk;
          const T* y = regs.data() + (sp - 1) * kChunk;
          with_binary<T>(ins.op, [&](auto fn) {
            for (std::size_t j = 0; j < len; ++j) x[j] = fn(x[j], y[j]);
          });
          --sp;
          break;
        }
      }
    }
    Out* o = out + base;
    for (std::size_t j = 0; j < len; ++j) o[j] = convert_elem<Out>(regs[j]);
  }
}

KernelTask elementwise_task(const KernelInvocation& inv, const BoundArgs& a) {
  KernelTask t;
  t.work_items = inv.n_elem;
  const FusedProgram* prog = inv.program.get();
  t.body = [prog, &a, in = inv.in_type, out = inv.out_type](std::size_t b, std::size_t e) {
    visit2(in, out, [&](auto ti, auto to) {
      run_program<typename decltype(ti)::type, typename decltype(to)::type>(*prog, a, b, e);
    });
  };
  return t;
}

// ---------------------------------------------------------------------------
// reductions: fixed-size blocks, then a pairwise tree over block partials

template <class A, class Combine> A pairwise_combine(std::vector<A>& p, Combine&& c) {
  std::size_t n = p.size();
  while (n > 1) {
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) p[i] = c(p[2 * i], p[2 * i + 1]);
    if (n % 2 == 1) p[half] = p[n - 1];
    n = half + n % 2;
  }
  return p[0];
}

template <Element T> KernelTask reduce_task(const KernelInvocation& inv, const BoundArgs& a) {
  using A = acc_t<T>;
  const std::size_t n = inv.n_elem;
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  auto partial = std::make_shared<std::vector<A>>(blocks);
  const T* x = a.in[0].as<T>();
  const T* y = inv.kind == K::reduce_dot ? a.in[1].as<T>() : nullptr;
  T* out = a.out[0].as<T>();
  const K kind = inv.kind;

  KernelTask t;
  t.work_items = blocks;
  t.body = [=](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t lo = b * kReduceBlock, hi = std::min(n, lo + kReduceBlock);
      A acc{};
      switch (kind) {
        case K::reduce_accu:
          for (std::size_t i = lo; i < hi; ++i) acc += static_cast<A>(x[i]);
          break;
        case K::reduce_dot:
          for (std::size_t i = lo; i < hi; ++i) acc += static_cast<A>(x[i]) * static_cast<A>(y[i]);
          break;
        case K::reduce_min:
          acc = x[lo];
          for (std::size_t i = lo + 1; i < hi; ++i)
            if (x[i] < acc) acc = x[i];
          break;
        case K::reduce_max:
          acc = x[lo];
          for (std::size_t i = lo + 1; i < hi; ++i)
            if (x[i] > acc) acc = x[i];
          break;
        default: break;
      }
      (*partial)[b] = acc;
    }
  };
  t.epilogue = [=] {
    if (partial->empty()) {
      out[0] = T{0};
      return;
    }
    A r;
    if (kind == K::reduce_min)
      r = pairwise_combine(*partial, [](A u, A v) { return v < u ? v : u; });
    else if (kind == K::reduce_max)
      r = pairwise_combine(*partial, [](A u, A v) { return v > u ? v : u; });
    else
      r = pairwise_combine(*partial, [](A u, A v) { return u + v; });
    out[0] = convert_elem<T>(r);
  };
  return t;
}

template <Element T> KernelTask reduce_dim_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t rows = g(inv, 0), cols = g(inv, 1), dim = g(inv, 2);
  const T* x = a.in[0].as<T>();
  T* out = a.out[0].as<T>();
  const K kind = inv.kind;
  // dim 0: one result per column, walking rows; dim 1: one per row, walking columns.
  const std::size_t extent = dim == 0 ? rows : cols;
  const std::size_t step = dim == 0 ? 1 : rows;
  const std::size_t lane = dim == 0 ? rows : 1;

  KernelTask t;
  t.work_items = dim == 0 ? cols : rows;
  t.body = [=](std::size_t b, std::size_t e) {
    for (std::size_t o = b; o < e; ++o) {
      const T* v = x + o * lane;
      switch (kind) {
        case K::reduce_dim_min:
        case K::reduce_dim_max: {
          T m = v[0];
          for (std::size_t i = 1; i < extent; ++i) {
            const T xi = v[i * step];
            if (kind == K::reduce_dim_min ? xi < m : xi > m) m = xi;
          }
          out[o] = m;
          break;
        }
        case K::reduce_dim_sum:
        case K::reduce_dim_mean: {
          if constexpr (std::is_floating_point_v<T>) {
            T s{0};
            for (std::size_t i = 0; i < extent; ++i) s += v[i * step];
            out[o] = kind == K::reduce_dim_sum ? s : s / static_cast<T>(extent);
          } else {
            acc_t<T> s{0};
            for (std::size_t i = 0; i < extent; ++i) s += static_cast<acc_t<T>>(v[i * step]);
            out[o] = kind == K::reduce_dim_sum
                         ? convert_elem<T>(s)
                         : convert_elem<T>(static_cast<double>(s) / static_cast<double>(extent));
          }
          break;
        }
        case K::reduce_dim_var:
        case K::reduce_dim_stddev: {
          using C = std::conditional_t<std::is_floating_point_v<T>, T, double>;
          // Shifted by the first element so constant input gives exactly 0.
          const C shift = extent ? static_cast<C>(v[0]) : C{0};
          C s{0};
          for (std::size_t i = 0; i < extent; ++i) s += static_cast<C>(v[i * step]) - shift;
          const C mean = s / static_cast<C>(extent);
          C acc{0};
          for (std::size_t i = 0; i < extent; ++i) {
            const C d = static_cast<C>(v[i * step]) - shift - mean;
            acc += d * d;
          }
          C var = extent > 1 ? acc / static_cast<C>(extent - 1) : C{0};
          if (kind == K::reduce_dim_stddev) var = std::sqrt(var);
          out[o] = convert_elem<T>(var);
          break;
        }
        default: break;
      }
    }
  };
  return t;
}

// ---------------------------------------------------------------------------
// data movement (all two-way: read In, write Out)

template <Element In, Element Out>
KernelTask movement_task(const KernelInvocation& inv, const BoundArgs& a) {
  const In* x = a.in.empty() ? nullptr : a.in[0].as<In>();
  Out* out = a.out[0].as<Out>();
  KernelTask t;
  auto cv = [](In v) { return convert_elem<Out>(v); };

  switch (inv.kind) {
    case K::mov_copy: {
      const std::size_t so = g(inv, 0), dof = g(inv, 1);
      t.work_items = inv.n_elem;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out[dof + i] = cv(x[so + i]);
      };
      break;
    }
    case K::mov_transpose: {
      const std::size_t rows = g(inv, 0), cols = g(inv, 1);
      t.work_items = rows;  // one output column per input row
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r)
          for (std::size_t c = 0; c < cols; ++c) out[c + r * cols] = cv(x[r + c * rows]);
      };
      break;
    }
    case K::mov_resize: {
      const std::size_t ir = g(inv, 0), ic = g(inv, 1), orows = g(inv, 2), ocols = g(inv, 3);
      t.work_items = ocols;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c)
          for (std::size_t r = 0; r < orows; ++r)
            out[r + c * orows] = (r < ir && c < ic) ? cv(x[r + c * ir]) : Out{0};
      };
      break;
    }
    case K::mov_reshape: {
      const std::size_t nin = g(inv, 0);
      t.work_items = inv.n_elem;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out[i] = i < nin ? cv(x[i]) : Out{0};
      };
      break;
    }
    case K::mov_extract:
    case K::mov_insert: {
      const std::size_t off = g(inv, 0), inner = g(inv, 1), istride = g(inv, 2),
                        outer = g(inv, 3), ostride = g(inv, 4);
      const bool extract = inv.kind == K::mov_extract;
      t.work_items = outer;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j)
          for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t strided = off + i * istride + j * ostride;
            const std::size_t packed = i + j * inner;
            if (extract)
              out[packed] = cv(x[strided]);
            else
              out[strided] = cv(x[packed]);
          }
      };
      break;
    }
    case K::mov_join_rows: {
      const In* y = a.in[1].as<In>();
      const std::size_t na = g(inv, 0);
      t.work_items = inv.n_elem;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out[i] = i < na ? cv(x[i]) : cv(y[i - na]);
      };
      break;
    }
    case K::mov_join_cols: {
      const In* y = a.in[1].as<In>();
      const std::size_t ra = g(inv, 0), rb = g(inv, 1), cols = g(inv, 2);
      const std::size_t rr = ra + rb;
      t.work_items = cols;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c)
          for (std::size_t r = 0; r < rr; ++r)
            out[r + c * rr] = r < ra ? cv(x[r + c * ra]) : cv(y[(r - ra) + c * rb]);
      };
      break;
    }
    case K::mov_diagmat: {
      const std::size_t mode = g(inv, 0), rows = g(inv, 1), cols = g(inv, 2);
      t.work_items = cols;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c)
          for (std::size_t r = 0; r < rows; ++r)
            out[r + c * rows] =
                r == c ? cv(mode == 0 ? x[r] : x[r + c * rows]) : Out{0};
      };
      break;
    }
    case K::mov_diagvec: {
      const std::size_t rows = g(inv, 0), r0 = g(inv, 2), c0 = g(inv, 3);
      t.work_items = inv.n_elem;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out[i] = cv(x[(r0 + i) + (c0 + i) * rows]);
      };
      break;
    }
    case K::gen_repmat: {
      const std::size_t ar = g(inv, 0), ac = g(inv, 1), p = g(inv, 2), q = g(inv, 3);
      const std::size_t orows = ar * p;
      t.work_items = ac * q;
      t.body = [=](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c)
          for (std::size_t r = 0; r < orows; ++r)
            out[r + c * orows] = cv(x[(r % ar) + (c % ac) * ar]);
      };
      break;
    }
    default: throw std::logic_error("movement_task: unexpected kind");
  }
  return t;
}

// ---------------------------------------------------------------------------
// predicates

template <Element T> KernelTask predicate_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = inv.n_elem;
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  auto counts = std::make_shared<std::vector<std::uint64_t>>(blocks);
  const T* x = a.in[0].as<T>();
  const auto rel = static_cast<RelOp>(inv.geom[0]);
  const T k = convert_elem<T>(inv.scalars.empty() ? 0.0 : inv.scalars[0]);
  const K kind = inv.kind;
  const std::uint64_t mode = inv.geom[1];
  std::uint64_t* out0 = a.out[0].as<std::uint64_t>();
  std::uint64_t* out1 = kind == K::pred_find ? a.out[1].as<std::uint64_t>() : nullptr;

  KernelTask t;
  t.work_items = blocks;
  t.body = [=](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t lo = b * kReduceBlock, hi = std::min(n, lo + kReduceBlock);
      std::uint64_t c = 0;
      for (std::size_t i = lo; i < hi; ++i) c += test_relation(rel, x[i], k) ? 1 : 0;
      (*counts)[b] = c;
    }
  };
  t.epilogue = [=] {
    std::uint64_t total = 0;
    for (auto c : *counts) total += c;
    switch (kind) {
      case K::pred_count: out0[0] = total; break;
      case K::pred_all_any: out0[0] = mode == 0 ? (total == n ? 1 : 0) : (total > 0 ? 1 : 0); break;
      case K::pred_find: {
        std::uint64_t w = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (test_relation(rel, x[i], k)) out0[w++] = i;
        out1[0] = total;
        break;
      }
      default: break;
    }
  };
  return t;
}

// ---------------------------------------------------------------------------
// dense linear algebra (floating point only)

template <Element T> KernelTask gemm_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t M = g(inv, 0), N = g(inv, 1), Kd = g(inv, 2);
  const bool ta = inv.geom[3] != 0, tb = inv.geom[4] != 0;
  const T* A = a.in[0].as<T>();
  const T* B = a.in[1].as<T>();
  T* C = a.out[0].as<T>();
  // op(A)(i, k) and op(B)(k, j) in column-major storage.
  const std::size_t lda = ta ? Kd : M, ldb = tb ? N : Kd;

  KernelTask t;
  t.work_items = N;
  t.body = [=](std::size_t j0, std::size_t j1) {
    constexpr std::size_t kb = 128, ib = 512;
    for (std::size_t j = j0; j < j1; ++j) std::fill_n(C + j * M, M, T{0});
    if (!ta) {
      // Blocked over (k, i). Each C(i, j) still accumulates k in ascending order.
      for (std::size_t k0 = 0; k0 < Kd; k0 += kb) {
        const std::size_t k1 = std::min(Kd, k0 + kb);
        for (std::size_t i0 = 0; i0 < M; i0 += ib) {
          const std::size_t i1 = std::min(M, i0 + ib);
          for (std::size_t j = j0; j < j1; ++j) {
            T* c = C + j * M;
            for (std::size_t k = k0; k < k1; ++k) {
              const T bkj = tb ? B[j + k * ldb] : B[k + j * ldb];
              const T* acol = A + k * lda;
              for (std::size_t i = i0; i < i1; ++i) c[i] += acol[i] * bkj;
            }
          }
        }
      }
    } else {
      for (std::size_t j = j0; j < j1; ++j)
        for (std::size_t i = 0; i < M; ++i) {
          const T* acol = A + i * lda;
          T s{0};
          for (std::size_t k = 0; k < Kd; ++k) s += acol[k] * (tb ? B[j + k * ldb] : B[k + j * ldb]);
          C[i + j * M] = s;
        }
    }
  };
  return t;
}

template <Element T> KernelTask lu_step_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = g(inv, 0), k = g(inv, 1);
  T* A = a.out[0].as<T>();
  auto* perm = a.out[1].as<std::uint64_t>();
  auto* status = a.out[2].as<std::uint64_t>();
  auto skip = std::make_shared<bool>(false);

  KernelTask t;
  t.prologue = [=] {
    if (k == 0) {
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      status[0] = 0;
      status[1] = 0;
    }
    std::size_t p = k;
    T best = std::abs(A[k + k * n]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const T v = std::abs(A[i + k * n]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == T{0}) {
      if (status[0] == 0) status[0] = k + 1;
      *skip = true;
      return;
    }
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A[k + c * n], A[p + c * n]);
      std::swap(perm[k], perm[p]);
      ++status[1];
    }
    const T piv = A[k + k * n];
    for (std::size_t i = k + 1; i < n; ++i) A[i + k * n] /= piv;
  };
  t.work_items = n - k - 1;
  t.body = [=](std::size_t b, std::size_t e) {
    if (*skip) return;
    const T* l = A + k * n;
    for (std::size_t j = k + 1 + b; j < k + 1 + e; ++j) {
      T* col = A + j * n;
      const T ukj = col[k];
      for (std::size_t i = k + 1; i < n; ++i) col[i] -= l[i] * ukj;
    }
  };
  return t;
}

template <Element T> KernelTask chol_step_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = g(inv, 0), k = g(inv, 1);
  T* A = a.out[0].as<T>();
  auto* status = a.out[1].as<std::uint64_t>();
  auto skip = std::make_shared<bool>(false);

  KernelTask t;
  t.prologue = [=] {
    if (k == 0) status[0] = 0;
    if (status[0] != 0) {
      *skip = true;
      return;
    }
    const T d = A[k + k * n];
    if (!(d > T{0})) {
      status[0] = k + 1;
      *skip = true;
      return;
    }
    const T r = std::sqrt(d);
    A[k + k * n] = r;
    for (std::size_t j = k + 1; j < n; ++j) A[k + j * n] /= r;
  };
  t.work_items = n - k - 1;
  t.body = [=](std::size_t b, std::size_t e) {
    if (*skip) return;
    for (std::size_t j = k + 1 + b; j < k + 1 + e; ++j) {
      T* col = A + j * n;
      const T rkj = A[k + j * n];
      for (std::size_t i = k + 1; i <= j; ++i) col[i] -= A[k + i * n] * rkj;
    }
  };
  return t;
}

template <Element T> KernelTask triangle_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = g(inv, 0), mode = g(inv, 1);
  const T* P = a.in[0].as<T>();
  T* first = a.out[0].as<T>();
  T* second = mode == 0 ? a.out[1].as<T>() : nullptr;
  KernelTask t;
  t.work_items = n;
  t.body = [=](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c)
      for (std::size_t r = 0; r < n; ++r) {
        const T v = P[r + c * n];
        if (mode == 0) {
          first[r + c * n] = r > c ? v : (r == c ? T{1} : T{0});
          second[r + c * n] = r <= c ? v : T{0};
        } else {
          first[r + c * n] = r <= c ? v : T{0};
        }
      }
  };
  return t;
}

template <Element T> KernelTask permute_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t rows = g(inv, 0), cols = g(inv, 1);
  const bool inverse = inv.geom[2] != 0;
  const T* X = a.in[0].as<T>();
  const auto* perm = a.in[1].as<std::uint64_t>();
  T* out = a.out[0].as<T>();
  KernelTask t;
  t.work_items = cols;
  t.body = [=](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c)
      for (std::size_t i = 0; i < rows; ++i) {
        if (inverse)
          out[perm[i] + c * rows] = X[i + c * rows];
        else
          out[i + c * rows] = X[perm[i] + c * rows];
      }
  };
  return t;
}

template <Element T> KernelTask trsm_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = g(inv, 0), nrhs = g(inv, 1);
  const bool lower = inv.kind == K::la_trsm_lower;
  const T* F = a.in[0].as<T>();
  T* B = a.out[0].as<T>();
  KernelTask t;
  t.work_items = nrhs;
  t.body = [=](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      T* x = B + c * n;
      if (lower) {
        for (std::size_t m = 0; m < n; ++m) {
          const T xm = x[m];
          for (std::size_t i = m + 1; i < n; ++i) x[i] -= F[i + m * n] * xm;
        }
      } else {
        for (std::size_t m = n; m-- > 0;) {
          x[m] /= F[m + m * n];
          const T xm = x[m];
          for (std::size_t i = 0; i < m; ++i) x[i] -= F[i + m * n] * xm;
        }
      }
    }
  };
  return t;
}

template <Element T> KernelTask diag_prod_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = g(inv, 0);
  const T* F = a.in[0].as<T>();
  const auto* status = a.in[1].as<std::uint64_t>();
  T* out = a.out[0].as<T>();
  KernelTask t;
  t.prologue = [=] {
    T p{1};
    for (std::size_t i = 0; i < n; ++i) p *= F[i + i * n];
    out[0] = status[1] % 2 == 1 ? -p : p;
  };
  return t;
}

template <Element T> KernelTask sym_dev_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = g(inv, 0);
  const T* X = a.in[0].as<T>();
  T* out = a.out[0].as<T>();
  KernelTask t;
  t.prologue = [=] {
    T dev{0}, ss{0};
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = 0; r < n; ++r) {
        const T v = X[r + c * n];
        ss += v * v;
        dev = std::max(dev, std::abs(v - X[c + r * n]));
      }
    out[0] = dev;
    out[1] = std::sqrt(ss);
  };
  return t;
}

template <Element T> KernelTask jacobi_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t n = g(inv, 0);
  T* A = a.out[0].as<T>();
  T* status = a.out[1].as<T>();
  KernelTask t;
  t.prologue = [=] {
    auto at = [=](std::size_t r, std::size_t c) -> T& { return A[r + c * n]; };
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const T apq = at(p, q);
        if (apq == T{0}) continue;
        const T app = at(p, p), aqq = at(q, q);
        // Skip rotations that cannot change the diagonal at this precision.
        const T tiny = std::numeric_limits<T>::epsilon() * T{0.01} * (std::abs(app) + std::abs(aqq));
        if (std::abs(apq) <= tiny && tiny > T{0}) {
          at(p, q) = at(q, p) = T{0};
          continue;
        }
        const T theta = (aqq - app) / (T{2} * apq);
        const T tt = (theta >= T{0} ? T{1} : T{-1}) /
                     (std::abs(theta) + std::sqrt(theta * theta + T{1}));
        const T c = T{1} / std::sqrt(tt * tt + T{1});
        const T s = tt * c;
        for (std::size_t k = 0; k < n; ++k) {
          const T akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const T apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        at(p, q) = at(q, p) = T{0};
        ++rotations;
      }
    T off{0};
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = 0; r < n; ++r)
        if (r != c) off += at(r, c) * at(r, c);
    status[0] = std::sqrt(off);
    status[1] = static_cast<T>(rotations);
  };
  return t;
}

template <Element T> KernelTask svd_sweep_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t m = g(inv, 0), n = g(inv, 1);
  T* U = a.out[0].as<T>();
  T* V = a.out[1].as<T>();
  T* status = a.out[2].as<T>();
  KernelTask t;
  t.prologue = [=] {
    const T eps = std::numeric_limits<T>::epsilon();
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        T* up = U + p * m;
        T* uq = U + q * m;
        T alpha{0}, beta{0}, gamma{0};
        for (std::size_t i = 0; i < m; ++i) {
          alpha += up[i] * up[i];
          beta += uq[i] * uq[i];
          gamma += up[i] * uq[i];
        }
        if (alpha == T{0} || beta == T{0}) continue;
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        const T zeta = (beta - alpha) / (T{2} * gamma);
        const T tt = (zeta >= T{0} ? T{1} : T{-1}) /
                     (std::abs(zeta) + std::sqrt(T{1} + zeta * zeta));
        const T c = T{1} / std::sqrt(T{1} + tt * tt);
        const T s = c * tt;
        for (std::size_t i = 0; i < m; ++i) {
          const T x = up[i], y = uq[i];
          up[i] = c * x - s * y;
          uq[i] = s * x + c * y;
        }
        T* vp = V + p * n;
        T* vq = V + q * n;
        for (std::size_t i = 0; i < n; ++i) {
          const T x = vp[i], y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
        ++rotations;
      }
    status[0] = static_cast<T>(rotations);
  };
  return t;
}

template <Element T> KernelTask scale_cols_task(const KernelInvocation& inv, const BoundArgs& a) {
  const std::size_t rows = g(inv, 0);
  const T* s = a.in[0].as<T>();
  T* X = a.out[0].as<T>();
  KernelTask t;
  t.work_items = g(inv, 1);
  t.body = [=](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c)
      for (std::size_t r = 0; r < rows; ++r) X[r + c * rows] *= s[c];
  };
  return t;
}

template <class F> KernelTask visit_float(ElemType t, F&& f) {
  switch (t) {
    case ElemType::f32: return f(std::type_identity<float>{});
    case ElemType::f64: return f(std::type_identity<double>{});
    default: throw std::invalid_argument("kernel requires a floating point element type");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Footprint footprint(const KernelInvocation& inv) {
  Footprint f;
  const std::size_t n = inv.n_elem;
  auto prod = [&](std::size_t i, std::size_t j) { return g(inv, i) * g(inv, j); };
  if (is_elementwise(inv.kind)) {
    const std::size_t nin = inv.program ? inv.program->n_inputs : 0;
    f.in.assign(nin, n);
    f.out = {n};
    return f;
  }
  switch (inv.kind) {
    case K::reduce_accu:
    case K::reduce_min:
    case K::reduce_max: f.in = {n}; f.out = {1}; break;
    case K::reduce_dot: f.in = {n, n}; f.out = {1}; break;
    case K::reduce_dim_sum:
    case K::reduce_dim_min:
    case K::reduce_dim_max:
    case K::reduce_dim_mean:
    case K::reduce_dim_var:
    case K::reduce_dim_stddev:
      f.in = {prod(0, 1)};
      f.out = {g(inv, 2) == 0 ? g(inv, 1) : g(inv, 0)};
      break;
    case K::gen_repmat: f.in = {prod(0, 1)}; f.out = {prod(0, 1) * prod(2, 3)}; break;
    case K::mov_copy: f.in = {g(inv, 0) + n}; f.out = {g(inv, 1) + n}; break;
    case K::mov_transpose: f.in = {prod(0, 1)}; f.out = {prod(0, 1)}; break;
    case K::mov_resize: f.in = {prod(0, 1)}; f.out = {prod(2, 3)}; break;
    case K::mov_reshape: f.in = {g(inv, 0)}; f.out = {n}; break;
    case K::mov_extract:
    case K::mov_insert: {
      const std::size_t inner = g(inv, 1), outer = g(inv, 3);
      const std::size_t packed = inner * outer;
      const std::size_t strided =
          packed == 0 ? 0 : g(inv, 0) + (inner - 1) * g(inv, 2) + (outer - 1) * g(inv, 4) + 1;
      if (inv.kind == K::mov_extract) {
        f.in = {strided};
        f.out = {packed};
      } else {
        f.in = {packed};
        f.out = {strided};
      }
      break;
    }
    case K::mov_join_rows: f.in = {g(inv, 0), g(inv, 1)}; f.out = {g(inv, 0) + g(inv, 1)}; break;
    case K::mov_join_cols:
      f.in = {prod(0, 2), prod(1, 2)};
      f.out = {(g(inv, 0) + g(inv, 1)) * g(inv, 2)};
      break;
    case K::mov_diagmat:
      f.in = {g(inv, 0) == 0 ? g(inv, 1) : prod(1, 2)};
      f.out = {prod(1, 2)};
      break;
    case K::mov_diagvec: f.in = {prod(0, 1)}; f.out = {n}; break;
    case K::pred_find: f.in = {n}; f.out = {n, 1}; break;
    case K::pred_all_any:
    case K::pred_count: f.in = {n}; f.out = {1}; break;
    case K::la_gemm: {
      const std::size_t M = g(inv, 0), N = g(inv, 1), Kd = g(inv, 2);
      f.in = {M * Kd, Kd * N};
      f.out = {M * N};
      break;
    }
    case K::la_lu_step: f.out = {prod(0, 0), g(inv, 0), 2}; break;
    case K::la_chol_step: f.out = {prod(0, 0), 1}; break;
    case K::la_triangle:
      f.in = {prod(0, 0)};
      f.out = g(inv, 1) == 0 ? std::vector<std::size_t>{prod(0, 0), prod(0, 0)}
                             : std::vector<std::size_t>{prod(0, 0)};
      break;
    case K::la_permute_rows: f.in = {prod(0, 1), g(inv, 0)}; f.out = {prod(0, 1)}; break;
    case K::la_trsm_lower:
    case K::la_trsm_upper: f.in = {prod(0, 0)}; f.out = {prod(0, 1)}; break;
    case K::la_diag_prod: f.in = {prod(0, 0), 2}; f.out = {1}; break;
    case K::la_sym_dev: f.in = {prod(0, 0)}; f.out = {2}; break;
    case K::la_jacobi_sweep: f.out = {prod(0, 0), 2}; break;
    case K::la_svd_sweep: f.out = {prod(0, 1), prod(1, 1), 1}; break;
    case K::la_scale_cols: f.in = {g(inv, 1)}; f.out = {prod(0, 1)}; break;
    default: break;
  }
  return f;
}

void validate(const KernelInvocation& inv) {
  if (is_elementwise(inv.kind)) {
    if (!inv.program) bad(inv, "element-wise kernel without a program");
    inv.program->validate();
    if (inv.program->op_count() > 8 && inv.kind == K::fused_chain)
      bad(inv, "fused chain deeper than 8 operations");
  }
  if (inv.kind == K::reduce_min || inv.kind == K::reduce_max)
    if (inv.n_elem == 0) bad(inv, "min/max of an empty object");
  const Footprint f = footprint(inv);
  if (inv.inputs.size() != f.in.size())
    bad(inv, "expected " + std::to_string(f.in.size()) + " inputs, got " +
                 std::to_string(inv.inputs.size()));
  if (inv.outputs.size() != f.out.size())
    bad(inv, "expected " + std::to_string(f.out.size()) + " outputs, got " +
                 std::to_string(inv.outputs.size()));
  for (std::size_t i = 0; i < f.in.size(); ++i)
    if (inv.inputs[i].length < f.in[i])
      bad(inv, "input " + std::to_string(i) + " holds " + std::to_string(inv.inputs[i].length) +
                   " elements, kernel reads " + std::to_string(f.in[i]));
  for (std::size_t i = 0; i < f.out.size(); ++i)
    if (inv.outputs[i].length < f.out[i])
      bad(inv, "output " + std::to_string(i) + " holds " + std::to_string(inv.outputs[i].length) +
                   " elements, kernel writes " + std::to_string(f.out[i]));
}

KernelTask prepare(const KernelInvocation& inv, const BoundArgs& a) {
  const K k = inv.kind;
  if (is_elementwise(k)) return elementwise_task(inv, a);

  switch (k) {
    case K::reduce_accu:
    case K::reduce_min:
    case K::reduce_max:
    case K::reduce_dot:
      return visit_elem_type(inv.in_type, [&](auto t) {
        return reduce_task<typename decltype(t)::type>(inv, a);
      });
    case K::reduce_dim_sum:
    case K::reduce_dim_min:
    case K::reduce_dim_max:
    case K::reduce_dim_mean:
    case K::reduce_dim_var:
    case K::reduce_dim_stddev:
      return visit_elem_type(inv.in_type, [&](auto t) {
        return reduce_dim_task<typename decltype(t)::type>(inv, a);
      });
    case K::pred_find:
    case K::pred_all_any:
    case K::pred_count:
      return visit_elem_type(inv.in_type, [&](auto t) {
        return predicate_task<typename decltype(t)::type>(inv, a);
      });
    case K::la_gemm:
      return visit_float(inv.in_type, [&](auto t) { return gemm_task<typename decltype(t)::type>(inv, a); });
    case K::la_lu_step:
      return visit_float(inv.in_type, [&](auto t) { return lu_step_task<typename decltype(t)::type>(inv, a); });
    case K::la_chol_step:
      return visit_float(inv.in_type, [&](auto t) { return chol_step_task<typename decltype(t)::type>(inv, a); });
    case K::la_triangle:
      return visit_float(inv.in_type, [&](auto t) { return triangle_task<typename decltype(t)::type>(inv, a); });
    case K::la_permute_rows:
      return visit_float(inv.in_type, [&](auto t) { return permute_task<typename decltype(t)::type>(inv, a); });
    case K::la_trsm_lower:
    case K::la_trsm_upper:
      return visit_float(inv.in_type, [&](auto t) { return trsm_task<typename decltype(t)::type>(inv, a); });
    case K::la_diag_prod:
      return visit_float(inv.in_type, [&](auto t) { return diag_prod_task<typename decltype(t)::type>(inv, a); });
    case K::la_sym_dev:
      return visit_float(inv.in_type, [&](auto t) { return sym_dev_task<typename decltype(t)::type>(inv, a); });
    case K::la_jacobi_sweep:
      return visit_float(inv.in_type, [&](auto t) { return jacobi_task<typename decltype(t)::type>(inv, a); });
    case K::la_svd_sweep:
      return visit_float(inv.in_type, [&](auto t) { return svd_sweep_task<typename decltype(t)::type>(inv, a); });
    case K::la_scale_cols:
      return visit_float(inv.in_type, [&](auto t) { return scale_cols_task<typename decltype(t)::type>(inv, a); });
    default:
      return visit2(inv.in_type, inv.out_type, [&](auto ti, auto to) {
        return movement_task<typename decltype(ti)::type, typename decltype(to)::type>(inv, a);
      });
  }
}

}  // namespace qk::kernels
