// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/oracle/tree_walk.hpp"

#include <cmath>

#include "quokka/rng.hpp"
#include "quokka/runtime/runtime.hpp"

namespace qk::oracle {

namespace {

using N = NodeKind;

HostMatrix walk(const ExprNode& n);

template <Element T> HostMatrix make(uword r, uword c) { return HostMatrix(r, c, std::vector<T>(r * c)); }

template <Element T> HostMatrix generator(const ExprNode& n) {
  const uword r = n.shape.rows, c = n.shape.cols;
  HostMatrix out = make<T>(r, c);
  auto& v = out.values<T>();
  for (uword i = 0; i < r * c; ++i) {
    switch (n.kind) {
      case N::gen_fill: v[i] = convert_elem<T>(n.aux.k); break;
      case N::gen_eye: v[i] = (i % r == i / r) ? T{1} : T{0}; break;
      case N::gen_linspace:
        if (i + 1 == r * c)
          v[i] = convert_elem<T>(n.aux.k2);
        else
          v[i] = convert_elem<T>(n.aux.k + static_cast<double>(i) * ((n.aux.k2 - n.aux.k) / static_cast<double>(r * c - 1)));
        break;
      case N::gen_randu: v[i] = rng::randu_value<T>(n.aux.seed, n.aux.stream, i); break;
      case N::gen_randn: v[i] = rng::randn_value<T>(n.aux.seed, n.aux.stream, i); break;
      default: break;
    }
  }
  return out;
}

template <Element T> HostMatrix structural(const ExprNode& n, const HostMatrix& a) {
  const auto& x = a.values<T>();
  const uword ar = a.n_rows, ac = a.n_cols;
  const uword r = n.shape.rows, c = n.shape.cols;
  HostMatrix out = make<T>(r, c);
  auto& y = out.values<T>();
  auto A = [&](uword i, uword j) { return x[i + j * ar]; };
  switch (n.kind) {
    case N::htrans:
      for (uword i = 0; i < ar; ++i)
        for (uword j = 0; j < ac; ++j) y[j + i * r] = A(i, j);
      break;
    case N::diagmat:
      if (ar == 1 || ac == 1) {
        for (uword i = 0; i < x.size(); ++i) y[i + i * r] = x[i];
      } else {
        for (uword i = 0; i < std::min(r, c); ++i) y[i + i * r] = A(i, i);
      }
      break;
    case N::diagvec: {
      const std::int64_t k = n.aux.i[0];
      const uword r0 = k < 0 ? static_cast<uword>(-k) : 0, c0 = k > 0 ? static_cast<uword>(k) : 0;
      for (uword i = 0; i < r; ++i) y[i] = A(r0 + i, c0 + i);
      break;
    }
    case N::vectorise:
      if (n.aux.i[0] == 0) {
        y = x;
      } else {
        uword w = 0;
        for (uword i = 0; i < ar; ++i)
          for (uword j = 0; j < ac; ++j) y[w++] = A(i, j);
      }
      break;
    case N::resize:
      for (uword j = 0; j < std::min(c, ac); ++j)
        for (uword i = 0; i < std::min(r, ar); ++i) y[i + j * r] = A(i, j);
      break;
    case N::reshape_copy:
      for (uword i = 0; i < std::min<uword>(y.size(), x.size()); ++i) y[i] = x[i];
      break;
    case N::repmat:
      for (uword j = 0; j < c; ++j)
        for (uword i = 0; i < r; ++i) y[i + j * r] = A(i % ar, j % ac);
      break;
    case N::submat: {
      const uword r0 = static_cast<uword>(n.aux.i[0]), c0 = static_cast<uword>(n.aux.i[1]);
      for (uword j = 0; j < c; ++j)
        for (uword i = 0; i < r; ++i) y[i + j * r] = A(r0 + i, c0 + j);
      break;
    }
    default: throw std::logic_error("oracle: unexpected structural node");
  }
  return out;
}

template <Element T> HostMatrix reduce_dim(const ExprNode& n, const HostMatrix& a) {
  const auto& x = a.values<T>();
  const uword ar = a.n_rows, ac = a.n_cols;
  const bool by_col = n.aux.i[0] == 0;
  const uword outer = by_col ? ac : ar, extent = by_col ? ar : ac;
  HostMatrix out = make<T>(n.shape.rows, n.shape.cols);
  auto& y = out.values<T>();
  for (uword o = 0; o < outer; ++o) {
    auto at = [&](uword i) { return by_col ? x[i + o * ar] : x[o + i * ar]; };
    switch (n.kind) {
      case N::min_dim:
      case N::max_dim: {
        T m = at(0);
        for (uword i = 1; i < extent; ++i) m = n.kind == N::min_dim ? std::min(m, at(i)) : std::max(m, at(i));
        y[o] = m;
        break;
      }
      case N::sum_dim:
      case N::mean_dim:
        if constexpr (std::is_floating_point_v<T>) {
          T s{0};
          for (uword i = 0; i < extent; ++i) s += at(i);
          y[o] = n.kind == N::sum_dim ? s : s / static_cast<T>(extent);
        } else {
          using Acc = std::conditional_t<std::is_signed_v<T>, std::int64_t, std::uint64_t>;
          Acc s{0};
          for (uword i = 0; i < extent; ++i) s += static_cast<Acc>(at(i));
          y[o] = n.kind == N::sum_dim ? convert_elem<T>(s)
                                      : convert_elem<T>(static_cast<double>(s) / static_cast<double>(extent));
        }
        break;
      case N::var_dim:
      case N::stddev_dim: {
        using C = std::conditional_t<std::is_floating_point_v<T>, T, double>;
        const C shift = extent ? static_cast<C>(at(0)) : C{0};
        C s{0};
        for (uword i = 0; i < extent; ++i) s += static_cast<C>(at(i)) - shift;
        const C mean = s / static_cast<C>(extent);
        C ss{0};
        for (uword i = 0; i < extent; ++i) {
          const C d = static_cast<C>(at(i)) - shift - mean;
          ss += d * d;
        }
        C v = extent > 1 ? ss / static_cast<C>(extent - 1) : C{0};
        if (n.kind == N::stddev_dim) v = std::sqrt(v);
        y[o] = convert_elem<T>(v);
        break;
      }
      default: throw std::logic_error("oracle: unexpected reduction");
    }
  }
  return out;
}

template <Element T> HostMatrix glue(const ExprNode& n, const HostMatrix& a, const HostMatrix& b) {
  const auto& x = a.values<T>();
  const auto& z = b.values<T>();
  const uword r = n.shape.rows, c = n.shape.cols;
  HostMatrix out = make<T>(r, c);
  auto& y = out.values<T>();
  switch (n.kind) {
    case N::times:
      if constexpr (std::is_floating_point_v<T>) {
        const uword kd = a.n_cols;
        for (uword j = 0; j < c; ++j)
          for (uword i = 0; i < r; ++i) {
            T s{0};
            for (uword k = 0; k < kd; ++k) s += x[i + k * r] * z[k + j * kd];
            y[i + j * r] = s;
          }
      }
      break;
    case N::join_rows:
      std::copy(x.begin(), x.end(), y.begin());
      std::copy(z.begin(), z.end(), y.begin() + static_cast<std::ptrdiff_t>(x.size()));
      break;
    case N::join_cols:
      for (uword j = 0; j < c; ++j) {
        for (uword i = 0; i < a.n_rows; ++i) y[i + j * r] = x[i + j * a.n_rows];
        for (uword i = 0; i < b.n_rows; ++i) y[a.n_rows + i + j * r] = z[i + j * b.n_rows];
      }
      break;
    default: {
      const ElemOp op = *elem_op_of(n.kind);
      for (uword i = 0; i < y.size(); ++i) y[i] = apply_binary<T>(op, x[i], z[i]);
    }
  }
  return out;
}

template <Element T> bool holds(T v, RelOp op, double k) {
  const double d = static_cast<double>(v);
  switch (op) {
    case RelOp::none: return v != T{0};
    case RelOp::lt: return d < k;
    case RelOp::le: return d <= k;
    case RelOp::gt: return d > k;
    case RelOp::ge: return d >= k;
    case RelOp::eq: return d == k;
    case RelOp::ne: return d != k;
  }
  return false;
}

template <Element T> HostMatrix terminal(const ExprNode& n, const HostMatrix& a) {
  const auto& x = a.values<T>();
  const auto op = static_cast<RelOp>(n.aux.i[0]);
  std::vector<std::uint64_t> idx;
  // Floats compare at their own precision, matching how the threshold is applied.
  for (uword i = 0; i < x.size(); ++i) {
    const bool hit = std::is_same_v<T, float> && op != RelOp::none
                         ? holds<T>(x[i], op, static_cast<double>(static_cast<float>(n.aux.k)))
                         : holds<T>(x[i], op, n.aux.k);
    if (hit) idx.push_back(i);
  }
  switch (n.kind) {
    case N::find:
    case N::find_relational: {
      const uword cnt = idx.size();
      return HostMatrix(cnt, 1, std::move(idx));
    }
    case N::all_reduce: return HostMatrix(1, 1, std::vector<std::uint64_t>{idx.size() == x.size() ? 1u : 0u});
    case N::any_reduce: return HostMatrix(1, 1, std::vector<std::uint64_t>{idx.empty() ? 0u : 1u});
    default: throw std::logic_error("oracle: unexpected terminal");
  }
}

HostMatrix read_leaf(const ExprNode& n) {
  HostMatrix h(n.shape.rows, n.shape.cols, n.type);
  if (h.n_elem() > 0)
    Runtime::get().copy_to_host(n.leaf, 0, std::span<std::byte>(h.bytes(), h.n_elem() * elem_size(n.type)));
  return h;
}

HostMatrix convert_to(const HostMatrix& a, ElemType target) {
  return visit_elem_type(target, [&](auto tag) {
    using To = typename decltype(tag)::type;
    std::vector<To> y(a.n_elem());
    std::visit(
        [&](const auto& x) {
          for (uword i = 0; i < y.size(); ++i) y[i] = convert_elem<To>(x[i]);
        },
        a.data);
    return HostMatrix(a.n_rows, a.n_cols, std::move(y));
  });
}

HostMatrix walk(const ExprNode& n) {
  if (n.kind == N::leaf) return read_leaf(n);
  const NodeClass cls = node_class(n.kind);
  if (cls == NodeClass::generator)
    return visit_elem_type(n.type, [&](auto t) { return generator<typename decltype(t)::type>(n); });

  const HostMatrix a = walk(*n.operands[0]);
  if (n.kind == N::conv_to) return convert_to(a, n.aux.target);
  const ElemType in = n.operands[0]->type;
  return visit_elem_type(in, [&](auto t) -> HostMatrix {
    using T = typename decltype(t)::type;
    switch (cls) {
      case NodeClass::terminal: return terminal<T>(n, a);
      case NodeClass::glue:
      case NodeClass::eglue: {
        const HostMatrix b = walk(*n.operands[1]);
        return glue<T>(n, a, b);
      }
      case NodeClass::eop: {
        const ElemOp op = *elem_op_of(n.kind);
        HostMatrix out = make<T>(n.shape.rows, n.shape.cols);
        const auto& x = a.values<T>();
        auto& y = out.values<T>();
        for (uword i = 0; i < y.size(); ++i) y[i] = apply_unary<T>(op, x[i], n.aux.k);
        return out;
      }
      default:
        switch (n.kind) {
          case N::sum_dim:
          case N::min_dim:
          case N::max_dim:
          case N::mean_dim:
          case N::var_dim:
          case N::stddev_dim: return reduce_dim<T>(n, a);
          default: return structural<T>(n, a);
        }
    }
  });
}

}  // namespace

HostMatrix tree_walk(const Expr& e) { return walk(*e.node()); }

}  // namespace qk::oracle
