// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <type_traits>

namespace qk {

using uword = std::uint64_t;

/// Element types a device matrix may hold.
enum class ElemType : std::uint8_t { f32, f64, i32, u64 };

inline constexpr std::array<ElemType, 4> all_elem_types{ElemType::f32, ElemType::f64,
                                                        ElemType::i32, ElemType::u64};

constexpr std::string_view to_string(ElemType t) noexcept {
  switch (t) {
    case ElemType::f32: return "f32";
    case ElemType::f64: return "f64";
    case ElemType::i32: return "i32";
    case ElemType::u64: return "u64";
  }
  return "?";
}

constexpr std::optional<ElemType> parse_elem_type(std::string_view s) noexcept {
  for (auto t : all_elem_types)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

constexpr std::size_t elem_size(ElemType t) noexcept {
  switch (t) {
    case ElemType::f32: return 4;
    case ElemType::f64: return 8;
    case ElemType::i32: return 4;
    case ElemType::u64: return 8;
  }
  return 0;
}

constexpr bool is_float(ElemType t) noexcept { return t == ElemType::f32 || t == ElemType::f64; }

template <class T> struct elem_type_of;
template <> struct elem_type_of<float> { static constexpr ElemType value = ElemType::f32; };
template <> struct elem_type_of<double> { static constexpr ElemType value = ElemType::f64; };
template <> struct elem_type_of<std::int32_t> { static constexpr ElemType value = ElemType::i32; };
template <> struct elem_type_of<std::uint64_t> { static constexpr ElemType value = ElemType::u64; };

template <class T> inline constexpr ElemType elem_type_v = elem_type_of<T>::value;

template <class T>
concept Element = std::is_same_v<T, float> || std::is_same_v<T, double> ||
                  std::is_same_v<T, std::int32_t> || std::is_same_v<T, std::uint64_t>;

/// Calls `f(std::type_identity<T>{})` with T the C++ type behind `t`.
template <class F> decltype(auto) visit_elem_type(ElemType t, F&& f) {
  switch (t) {
    case ElemType::f32: return f(std::type_identity<float>{});
    case ElemType::f64: return f(std::type_identity<double>{});
    case ElemType::i32: return f(std::type_identity<std::int32_t>{});
    case ElemType::u64: return f(std::type_identity<std::uint64_t>{});
  }
  throw std::logic_error("invalid element type");
}

/// Element conversion used everywhere a value changes type (conv_to, two-way
/// kernels, scalar operands). Float to integer truncates toward zero; NaN maps
/// to 0 and out-of-range values saturate.
template <Element To, class From> constexpr To convert_elem(From v) noexcept {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (std::is_floating_point_v<To>) {
    return static_cast<To>(v);
  } else if constexpr (std::is_floating_point_v<From>) {
    if (std::isnan(v)) return To{0};
    const long double x = std::trunc(static_cast<long double>(v));
    if (x <= static_cast<long double>(std::numeric_limits<To>::min()))
      return std::numeric_limits<To>::min();
    if (x >= static_cast<long double>(std::numeric_limits<To>::max()))
      return std::numeric_limits<To>::max();
    return static_cast<To>(x);
  } else {
    // integer -> integer
    if constexpr (std::is_signed_v<From> && !std::is_signed_v<To>) {
      if (v < 0) return To{0};
      return static_cast<To>(v);
    } else if constexpr (!std::is_signed_v<From> && std::is_signed_v<To>) {
      if (v > static_cast<From>(std::numeric_limits<To>::max()))
        return std::numeric_limits<To>::max();
      return static_cast<To>(v);
    } else {
      return static_cast<To>(v);
    }
  }
}

}  // namespace qk
