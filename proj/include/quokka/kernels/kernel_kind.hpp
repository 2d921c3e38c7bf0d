// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quokka/elem_ops.hpp"
#include "quokka/elem_type.hpp"

namespace qk::kernels {

#define QK_KERNEL_KINDS(X)                                                                     \
  X(eop_exp) X(eop_log) X(eop_log10) X(eop_sqrt) X(eop_square) X(eop_cos) X(eop_sin)           \
  X(eop_tan) X(eop_acos) X(eop_asin) X(eop_atan) X(eop_abs) X(eop_pow)                         \
  X(eop_scalar_plus) X(eop_scalar_minus_pre) X(eop_scalar_minus_post) X(eop_scalar_times)      \
  X(eop_scalar_div_pre) X(eop_scalar_div_post)                                                 \
  X(eglue_plus) X(eglue_minus) X(eglue_schur) X(eglue_div)                                     \
  X(fused_chain)                                                                               \
  X(reduce_accu) X(reduce_min) X(reduce_max) X(reduce_dot)                                     \
  X(reduce_dim_sum) X(reduce_dim_min) X(reduce_dim_max) X(reduce_dim_mean) X(reduce_dim_var)   \
  X(reduce_dim_stddev)                                                                         \
  X(gen_fill) X(gen_eye) X(gen_linspace) X(gen_randu) X(gen_randn) X(gen_repmat)               \
  X(mov_copy) X(mov_transpose) X(mov_resize) X(mov_reshape) X(mov_extract) X(mov_insert)       \
  X(mov_join_rows) X(mov_join_cols) X(mov_diagmat) X(mov_diagvec)                              \
  X(pred_find) X(pred_all_any) X(pred_count)                                                   \
  X(la_gemm) X(la_lu_step) X(la_chol_step) X(la_trsm_lower) X(la_trsm_upper)                   \
  X(la_permute_rows) X(la_triangle) X(la_jacobi_sweep) X(la_svd_sweep) X(la_scale_cols)        \
  X(la_diag_prod) X(la_sym_dev)

enum class KernelKind : std::uint8_t {
#define QK_ENUM(name) name,
  QK_KERNEL_KINDS(QK_ENUM)
#undef QK_ENUM
};

inline constexpr KernelKind all_kernel_kinds[] = {
#define QK_LIST(name) KernelKind::name,
    QK_KERNEL_KINDS(QK_LIST)
#undef QK_LIST
};

constexpr std::string_view to_string(KernelKind k) noexcept {
  constexpr std::string_view names[] = {
#define QK_NAME(name) #name,
      QK_KERNEL_KINDS(QK_NAME)
#undef QK_NAME
  };
  return names[static_cast<std::size_t>(k)];
}

std::optional<KernelKind> parse_kernel_kind(std::string_view s) noexcept;

/// How a kernel kind's (input, output) element types may relate.
enum class TypePolicy : std::uint8_t {
  same,     ///< out == in
  two_way,  ///< any (in, out) pair; in != out is the fused-conversion variant
  to_index  ///< out is always u64
};

TypePolicy type_policy(KernelKind k) noexcept;
/// Dense linear algebra kernels exist for f32 and f64 only.
bool float_only(KernelKind k) noexcept;

bool is_elementwise(KernelKind k) noexcept;

/// Kernel kind for a standalone element-wise op.
KernelKind kernel_for(ElemOp op) noexcept;

struct KernelSignature {
  KernelKind kind;
  ElemType in_type;
  ElemType out_type;
  auto operator<=>(const KernelSignature&) const = default;
};

/// Every kernel that a device with the given capability compiles at init.
std::vector<KernelSignature> inventory(bool supports_f64);

/// Generated source text of a kernel (the input to the cache's source hash).
std::string source_text(const KernelSignature& sig);

}  // namespace qk::kernels
