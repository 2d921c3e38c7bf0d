// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "quokka/kernels/kernel_kind.hpp"

namespace qk {

struct KernelCacheEntry {
  std::uint64_t descriptor_hash = 0;
  kernels::KernelSignature sig{};
  std::uint64_t source_hash = 0;

  /// `descriptor_hash<TAB>kernel_kind<TAB>in_type<TAB>out_type<TAB>source_hash`
  std::string to_line() const;
  friend bool operator==(const KernelCacheEntry&, const KernelCacheEntry&) = default;
};

inline constexpr const char* manifest_name = "kernels.manifest";

struct ManifestLoad {
  std::vector<KernelCacheEntry> entries;
  bool present = false;
  std::string warning;  ///< nonempty when the file was unreadable or corrupt
};

/// Reads `dir/kernels.manifest`. Any malformed line discards the whole file.
ManifestLoad kernel_cache_load(const std::filesystem::path& dir);

/// Writes all entries sorted lexicographically by line, one per line.
void kernel_cache_store(const std::filesystem::path& dir, std::vector<KernelCacheEntry> entries);

/// $KERNEL_CACHE_DIR, else ~/.quokka, else ./.quokka.
std::filesystem::path default_cache_dir();

}  // namespace qk
