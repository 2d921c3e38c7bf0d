// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quokka/elem_ops.hpp"
#include "quokka/rng.hpp"

namespace qk::kernels {

enum class GenKind : std::uint8_t { fill, eye, linspace, randu, randn };

/// One step of a fused element-wise program. Programs run on a per-element
/// value stack: `load` and `gen` push, `unary` rewrites the top, `binary` pops
/// two and pushes one.
struct Instr {
  enum class Code : std::uint8_t { load, gen, unary, binary };

  Code code = Code::load;
  ElemOp op = ElemOp::plus;
  GenKind gen = GenKind::fill;
  std::uint32_t input = 0;
  double k = 0.0;   // scalar operand, fill value or linspace start
  double k2 = 0.0;  // linspace end
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t rows = 0;  // eye: row count of the output
  std::uint64_t count = 0; // linspace: element count

  static Instr load_input(std::uint32_t i) { return Instr{.code = Code::load, .input = i}; }
  static Instr unary(ElemOp op, double k = 0.0) { return Instr{.code = Code::unary, .op = op, .k = k}; }
  static Instr binary(ElemOp op) { return Instr{.code = Code::binary, .op = op}; }
};

/// A compiled sequence of element-wise operations executed as one kernel.
struct FusedProgram {
  std::vector<Instr> code;
  std::uint32_t n_inputs = 0;

  std::size_t max_stack() const noexcept;
  /// Number of element-wise operations (unary + binary instructions).
  std::size_t op_count() const noexcept;
  /// Throws std::logic_error if the program is malformed.
  void validate() const;
  std::string describe() const;
};

/// Value of generator `g` at linear element index `i` (column-major).
template <Element T> T generator_value(const Instr& g, std::uint64_t i) {
  switch (g.gen) {
    case GenKind::fill: return convert_elem<T>(g.k);
    case GenKind::eye: return (i % g.rows == i / g.rows) ? T{1} : T{0};
    case GenKind::linspace: {
      if (i + 1 == g.count) return convert_elem<T>(g.k2);
      const double step = (g.k2 - g.k) / static_cast<double>(g.count - 1);
      return convert_elem<T>(g.k + static_cast<double>(i) * step);
    }
    case GenKind::randu: return rng::randu_value<T>(g.seed, g.stream, i);
    case GenKind::randn: return rng::randn_value<T>(g.seed, g.stream, i);
  }
  return T{0};
}

}  // namespace qk::kernels
