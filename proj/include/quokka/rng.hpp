// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "quokka/elem_type.hpp"

namespace qk::rng {

// Philox4x32-10 (Salmon et al., SC'11). A pure function of (counter, key), so a
// value depends only on (seed, stream, element index) and never on scheduling.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

constexpr Counter philox4x32_10(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

constexpr Counter draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  return philox4x32_10({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                        static_cast<std::uint32_t>(stream),
                        static_cast<std::uint32_t>(stream >> 32)},
                       {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform_f64(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  const auto r = draw(seed, stream, index);
  const std::uint64_t bits = (std::uint64_t{r[0]} << 32 | r[1]) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

/// Uniform on [0, 1) with 24 random bits (exactly representable as float).
inline float uniform_f32(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  const auto r = draw(seed, stream, index);
  return static_cast<float>(r[0] >> 8) * 0x1.0p-24f;
}

/// Standard normal via Box-Muller over the same counter-based stream.
inline double normal_f64(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  const auto r = draw(seed, stream, index);
  const double u1 =
      static_cast<double>((std::uint64_t{r[0]} << 32 | r[1]) >> 11) * 0x1.0p-53;
  const double u2 =
      static_cast<double>((std::uint64_t{r[2]} << 32 | r[3]) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <Element T> T randu_value(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  if constexpr (std::is_same_v<T, float>)
    return uniform_f32(seed, stream, index);
  else
    return convert_elem<T>(uniform_f64(seed, stream, index));
}

template <Element T> T randn_value(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return convert_elem<T>(normal_f64(seed, stream, index));
}

}  // namespace qk::rng
