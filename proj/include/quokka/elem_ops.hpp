// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

#include "quokka/elem_type.hpp"

namespace qk {

/// Element-wise operations. The first group takes one operand, the second one
/// operand plus a scalar `k`, the third two operands.
enum class ElemOp : std::uint8_t {
  exp, log, log10, sqrt, square, cos, sin, tan, acos, asin, atan, abs,
  pow, scalar_plus, scalar_minus_pre, scalar_minus_post, scalar_times, scalar_div_pre,
  scalar_div_post,
  plus, minus, schur, div,
};

inline constexpr std::size_t elem_op_count = static_cast<std::size_t>(ElemOp::div) + 1;

constexpr bool is_binary(ElemOp op) noexcept { return op >= ElemOp::plus; }
constexpr bool takes_scalar(ElemOp op) noexcept { return op >= ElemOp::pow && op < ElemOp::plus; }

constexpr std::string_view to_string(ElemOp op) noexcept {
  constexpr std::string_view names[] = {
      "exp",         "log",          "log10",           "sqrt",           "square",
      "cos",         "sin",          "tan",             "acos",           "asin",
      "atan",        "abs",          "pow",             "scalar_plus",    "scalar_minus_pre",
      "scalar_minus_post", "scalar_times", "scalar_div_pre", "scalar_div_post", "plus",
      "minus",       "schur",        "div"};
  return names[static_cast<std::size_t>(op)];
}

namespace detail {

// Integer arithmetic wraps (two's complement for i32); division by zero is 0.
template <Element T> constexpr T add(T a, T b) noexcept {
  if constexpr (std::is_same_v<T, std::int32_t>)
    return static_cast<T>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
  else
    return a + b;
}
template <Element T> constexpr T sub(T a, T b) noexcept {
  if constexpr (std::is_same_v<T, std::int32_t>)
    return static_cast<T>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
  else
    return a - b;
}
template <Element T> constexpr T mul(T a, T b) noexcept {
  if constexpr (std::is_same_v<T, std::int32_t>)
    return static_cast<T>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
  else
    return a * b;
}
template <Element T> constexpr T div(T a, T b) noexcept {
  if constexpr (std::is_floating_point_v<T>) {
    return a / b;
  } else {
    if (b == 0) return 0;
    if constexpr (std::is_signed_v<T>)
      if (a == std::numeric_limits<T>::min() && b == -1) return a;
    return a / b;
  }
}

// Transcendental functions: native precision for floats, computed in double and
// converted back for integer types.
template <Element T, class F> T math(T x, F&& f) noexcept {
  if constexpr (std::is_floating_point_v<T>)
    return f(x);
  else
    return convert_elem<T>(f(static_cast<double>(x)));
}

}  // namespace detail

/// Invokes `f(fn)` where `fn` is the per-element functor for unary/scalar op `op`.
template <Element T, class F> decltype(auto) with_unary(ElemOp op, double kd, F&& f) {
  using namespace detail;
  const T k = convert_elem<T>(kd);
  switch (op) {
    case ElemOp::exp: return f([](T x) { return math(x, [](auto v) { return std::exp(v); }); });
    case ElemOp::log: return f([](T x) { return math(x, [](auto v) { return std::log(v); }); });
    case ElemOp::log10:
      return f([](T x) { return math(x, [](auto v) { return std::log10(v); }); });
    case ElemOp::sqrt: return f([](T x) { return math(x, [](auto v) { return std::sqrt(v); }); });
    case ElemOp::square: return f([](T x) { return mul(x, x); });
    case ElemOp::cos: return f([](T x) { return math(x, [](auto v) { return std::cos(v); }); });
    case ElemOp::sin: return f([](T x) { return math(x, [](auto v) { return std::sin(v); }); });
    case ElemOp::tan: return f([](T x) { return math(x, [](auto v) { return std::tan(v); }); });
    case ElemOp::acos: return f([](T x) { return math(x, [](auto v) { return std::acos(v); }); });
    case ElemOp::asin: return f([](T x) { return math(x, [](auto v) { return std::asin(v); }); });
    case ElemOp::atan: return f([](T x) { return math(x, [](auto v) { return std::atan(v); }); });
    case ElemOp::abs:
      return f([](T x) {
        if constexpr (std::is_unsigned_v<T>)
          return x;
        else if constexpr (std::is_floating_point_v<T>)
          return std::abs(x);
        else
          return x < 0 ? sub(T{0}, x) : x;
      });
    case ElemOp::pow:
      return f([kd](T x) {
        if constexpr (std::is_floating_point_v<T>)
          return static_cast<T>(std::pow(x, static_cast<T>(kd)));
        else
          return convert_elem<T>(std::pow(static_cast<double>(x), kd));
      });
    case ElemOp::scalar_plus: return f([k](T x) { return add(x, k); });
    case ElemOp::scalar_minus_pre: return f([k](T x) { return sub(k, x); });
    case ElemOp::scalar_minus_post: return f([k](T x) { return sub(x, k); });
    case ElemOp::scalar_times: return f([k](T x) { return mul(x, k); });
    case ElemOp::scalar_div_pre: return f([k](T x) { return div(k, x); });
    case ElemOp::scalar_div_post: return f([k](T x) { return div(x, k); });
    default: break;
  }
  throw std::logic_error("with_unary: not a unary element-wise op");
}

/// Invokes `f(fn)` where `fn(a, b)` is the per-element functor for binary op `op`.
template <Element T, class F> decltype(auto) with_binary(ElemOp op, F&& f) {
  using namespace detail;
  switch (op) {
    case ElemOp::plus: return f([](T a, T b) { return add(a, b); });
    case ElemOp::minus: return f([](T a, T b) { return sub(a, b); });
    case ElemOp::schur: return f([](T a, T b) { return mul(a, b); });
    case ElemOp::div: return f([](T a, T b) { return div(a, b); });
    default: break;
  }
  throw std::logic_error("with_binary: not a binary element-wise op");
}

template <Element T> T apply_unary(ElemOp op, T x, double k) {
  return with_unary<T>(op, k, [x](auto fn) { return fn(x); });
}

template <Element T> T apply_binary(ElemOp op, T a, T b) {
  return with_binary<T>(op, [a, b](auto fn) { return fn(a, b); });
}

/// Relational operators usable in find/all/any/count.
enum class RelOp : std::uint8_t { none, lt, le, gt, ge, eq, ne };

template <Element T> constexpr bool test_relation(RelOp op, T x, T k) noexcept {
  switch (op) {
    case RelOp::none: return x != T{0};
    case RelOp::lt: return x < k;
    case RelOp::le: return x <= k;
    case RelOp::gt: return x > k;
    case RelOp::ge: return x >= k;
    case RelOp::eq: return x == k;
    case RelOp::ne: return x != k;
  }
  return false;
}

}  // namespace qk
