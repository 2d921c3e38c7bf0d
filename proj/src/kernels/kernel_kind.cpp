// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/kernels/kernel_kind.hpp"

#include <string>

namespace qk::kernels {

std::optional<KernelKind> parse_kernel_kind(std::string_view s) noexcept {
  for (auto k : all_kernel_kinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

bool float_only(KernelKind k) noexcept { return k >= KernelKind::la_gemm; }

bool is_elementwise(KernelKind k) noexcept {
  return k <= KernelKind::fused_chain ||
         (k >= KernelKind::gen_fill && k <= KernelKind::gen_randn);
}

TypePolicy type_policy(KernelKind k) noexcept {
  if (k <= KernelKind::fused_chain) return TypePolicy::two_way;
  if (k >= KernelKind::gen_fill && k <= KernelKind::mov_diagvec) return TypePolicy::two_way;
  if (k >= KernelKind::pred_find && k <= KernelKind::pred_count) return TypePolicy::to_index;
  return TypePolicy::same;
}

KernelKind kernel_for(ElemOp op) noexcept {
  switch (op) {
    case ElemOp::exp: return KernelKind::eop_exp;
    case ElemOp::log: return KernelKind::eop_log;
    case ElemOp::log10: return KernelKind::eop_log10;
    case ElemOp::sqrt: return KernelKind::eop_sqrt;
    case ElemOp::square: return KernelKind::eop_square;
    case ElemOp::cos: return KernelKind::eop_cos;
    case ElemOp::sin: return KernelKind::eop_sin;
    case ElemOp::tan: return KernelKind::eop_tan;
    case ElemOp::acos: return KernelKind::eop_acos;
    case ElemOp::asin: return KernelKind::eop_asin;
    case ElemOp::atan: return KernelKind::eop_atan;
    case ElemOp::abs: return KernelKind::eop_abs;
    case ElemOp::pow: return KernelKind::eop_pow;
    case ElemOp::scalar_plus: return KernelKind::eop_scalar_plus;
    case ElemOp::scalar_minus_pre: return KernelKind::eop_scalar_minus_pre;
    case ElemOp::scalar_minus_post: return KernelKind::eop_scalar_minus_post;
    case ElemOp::scalar_times: return KernelKind::eop_scalar_times;
    case ElemOp::scalar_div_pre: return KernelKind::eop_scalar_div_pre;
    case ElemOp::scalar_div_post: return KernelKind::eop_scalar_div_post;
    case ElemOp::plus: return KernelKind::eglue_plus;
    case ElemOp::minus: return KernelKind::eglue_minus;
    case ElemOp::schur: return KernelKind::eglue_schur;
    case ElemOp::div: return KernelKind::eglue_div;
  }
  return KernelKind::fused_chain;
}

std::vector<KernelSignature> inventory(bool supports_f64) {
  std::vector<ElemType> types;
  for (auto t : all_elem_types)
    if (supports_f64 || t != ElemType::f64) types.push_back(t);

  std::vector<KernelSignature> out;
  for (auto k : all_kernel_kinds) {
    if (float_only(k)) {
      for (auto t : types)
        if (is_float(t)) out.push_back({k, t, t});
      continue;
    }
    switch (type_policy(k)) {
      case TypePolicy::same:
        for (auto t : types) out.push_back({k, t, t});
        break;
      case TypePolicy::to_index:
        for (auto t : types) out.push_back({k, t, ElemType::u64});
        break;
      case TypePolicy::two_way:
        for (auto a : types)
          for (auto b : types) out.push_back({k, a, b});
        break;
    }
  }
  return out;
}

namespace {

std::string_view c_type(ElemType t) {
  switch (t) {
    case ElemType::f32: return "float";
    case ElemType::f64: return "double";
    case ElemType::i32: return "int";
    case ElemType::u64: return "ulong";
  }
  return "void";
}

// Per-element expression for the element-wise kinds, in terms of `x`, `y`, `k`.
std::string_view elementwise_expr(KernelKind k) {
  switch (k) {
    case KernelKind::eop_exp: return "exp(x)";
    case KernelKind::eop_log: return "log(x)";
    case KernelKind::eop_log10: return "log10(x)";
    case KernelKind::eop_sqrt: return "sqrt(x)";
    case KernelKind::eop_square: return "x * x";
    case KernelKind::eop_cos: return "cos(x)";
    case KernelKind::eop_sin: return "sin(x)";
    case KernelKind::eop_tan: return "tan(x)";
    case KernelKind::eop_acos: return "acos(x)";
    case KernelKind::eop_asin: return "asin(x)";
    case KernelKind::eop_atan: return "atan(x)";
    case KernelKind::eop_abs: return "abs(x)";
    case KernelKind::eop_pow: return "pow(x, k)";
    case KernelKind::eop_scalar_plus: return "x + k";
    case KernelKind::eop_scalar_minus_pre: return "k - x";
    case KernelKind::eop_scalar_minus_post: return "x - k";
    case KernelKind::eop_scalar_times: return "x * k";
    case KernelKind::eop_scalar_div_pre: return "k / x";
    case KernelKind::eop_scalar_div_post: return "x / k";
    case KernelKind::eglue_plus: return "x + y";
    case KernelKind::eglue_minus: return "x - y";
    case KernelKind::eglue_schur: return "x * y";
    case KernelKind::eglue_div: return "x / y";
    case KernelKind::gen_fill: return "k";
    case KernelKind::gen_eye: return "(i % rows == i / rows) ? 1 : 0";
    case KernelKind::gen_linspace: return "(i + 1 == n) ? k2 : k + i * ((k2 - k) / (n - 1))";
    case KernelKind::gen_randu: return "philox_uniform(seed, stream, i)";
    case KernelKind::gen_randn: return "philox_normal(seed, stream, i)";
    default: return "";
  }
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
}

}  // namespace

std::string source_text(const KernelSignature& sig) {
  std::string src;
  const auto expr = elementwise_expr(sig.kind);
  if (sig.kind == KernelKind::fused_chain) {
    src =
        "__kernel void qk_${NAME}(__global const ${IN}* const* in, __global ${OUT}* out,\n"
        "                         __constant const qk_instr* code, const uint n_code,\n"
        "                         const ulong n) {\n"
        "  const ulong i = get_global_id(0);\n"
        "  if (i >= n) return;\n"
        "  ${IN} stack[QK_MAX_STACK];\n"
        "  uint sp = 0;\n"
        "  for (uint c = 0; c < n_code; ++c) sp = qk_step_${IN}(code[c], in, i, stack, sp);\n"
        "  out[i] = qk_convert_${IN}_${OUT}(stack[0]);\n"
        "}\n";
  } else if (!expr.empty()) {
    src =
        "__kernel void qk_${NAME}(__global const ${IN}* in0, __global const ${IN}* in1,\n"
        "                         __global ${OUT}* out, const ${IN} k, const ${IN} k2,\n"
        "                         const ulong rows, const ulong n, const ulong seed,\n"
        "                         const ulong stream) {\n"
        "  const ulong i = get_global_id(0);\n"
        "  if (i >= n) return;\n"
        "  const ${IN} x = in0 ? in0[i] : 0;\n"
        "  const ${IN} y = in1 ? in1[i] : 0;\n"
        "  out[i] = qk_convert_${IN}_${OUT}(${EXPR});\n"
        "}\n";
  } else {
    src =
        "__kernel void qk_${NAME}(__global const ${IN}* const* in, __global ${OUT}* const* out,\n"
        "                         __constant const ulong* geom, __constant const double* "
        "scalars,\n"
        "                         const ulong n) {\n"
        "  // ${NAME}: ${IN} -> ${OUT}\n"
        "  qk_${KIND}_body_${IN}_${OUT}(in, out, geom, scalars, get_global_id(0), n);\n"
        "}\n";
  }
  std::string name = std::string(to_string(sig.kind)) + "_" + std::string(to_string(sig.in_type)) +
                     "_" + std::string(to_string(sig.out_type));
  replace_all(src, "${EXPR}", expr);
  replace_all(src, "${NAME}", name);
  replace_all(src, "${KIND}", to_string(sig.kind));
  replace_all(src, "${IN}", c_type(sig.in_type));
  replace_all(src, "${OUT}", c_type(sig.out_type));
  return src;
}

}  // namespace qk::kernels
