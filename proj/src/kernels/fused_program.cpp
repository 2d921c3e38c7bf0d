// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/kernels/fused_program.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace qk::kernels {

std::size_t FusedProgram::max_stack() const noexcept {
  std::size_t sp = 0, peak = 0;
  for (const auto& ins : code) {
    switch (ins.code) {
      case Instr::Code::load:
      case Instr::Code::gen: peak = std::max(peak, ++sp); break;
      case Instr::Code::unary: break;
      case Instr::Code::binary: --sp; break;
    }
  }
  return peak;
}

std::size_t FusedProgram::op_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(code.begin(), code.end(), [](const Instr& i) {
    return i.code == Instr::Code::unary || i.code == Instr::Code::binary;
  }));
}

void FusedProgram::validate() const {
  std::size_t sp = 0;
  for (const auto& ins : code) {
    switch (ins.code) {
      case Instr::Code::load:
        if (ins.input >= n_inputs) throw std::logic_error("fused program: load of unknown input");
        ++sp;
        break;
      case Instr::Code::gen:
        if (ins.gen == GenKind::eye && ins.rows == 0)
          throw std::logic_error("fused program: eye generator without rows");
        ++sp;
        break;
      case Instr::Code::unary:
        if (sp < 1 || is_binary(ins.op)) throw std::logic_error("fused program: bad unary step");
        break;
      case Instr::Code::binary:
        if (sp < 2 || !is_binary(ins.op)) throw std::logic_error("fused program: bad binary step");
        --sp;
        break;
    }
  }
  if (sp != 1) throw std::logic_error("fused program must leave exactly one value");
}

std::string FusedProgram::describe() const {
  std::ostringstream os;
  for (const auto& ins : code) {
    switch (ins.code) {
      case Instr::Code::load: os << "load(" << ins.input << ") "; break;
      case Instr::Code::gen: os << "gen(" << static_cast<int>(ins.gen) << ") "; break;
      case Instr::Code::unary: os << to_string(ins.op) << "(" << ins.k << ") "; break;
      case Instr::Code::binary: os << to_string(ins.op) << " "; break;
    }
  }
  return os.str();
}

}  // namespace qk::kernels
