// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/runtime/kernel_cache.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "quokka/hash.hpp"

namespace qk {

namespace fs = std::filesystem;

std::string KernelCacheEntry::to_line() const {
  std::string s = to_hex16(descriptor_hash);
  s += '\t';
  s += kernels::to_string(sig.kind);
  s += '\t';
  s += to_string(sig.in_type);
  s += '\t';
  s += to_string(sig.out_type);
  s += '\t';
  s += to_hex16(source_hash);
  return s;
}

namespace {

std::optional<std::uint64_t> parse_hex16(std::string_view s) {
  if (s.size() != 16) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9')
      v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else
      return std::nullopt;
  }
  return v;
}

std::optional<KernelCacheEntry> parse_line(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    f.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (f.size() != 5) return std::nullopt;
  const auto dh = parse_hex16(f[0]);
  const auto kind = kernels::parse_kernel_kind(f[1]);
  const auto in = parse_elem_type(f[2]);
  const auto out = parse_elem_type(f[3]);
  const auto sh = parse_hex16(f[4]);
  if (!dh || !kind || !in || !out || !sh) return std::nullopt;
  return KernelCacheEntry{*dh, {*kind, *in, *out}, *sh};
}

}  // namespace

ManifestLoad kernel_cache_load(const fs::path& dir) {
  ManifestLoad r;
  const fs::path file = dir / manifest_name;
  std::error_code ec;
  if (!fs::exists(file, ec)) return r;
  r.present = true;

  std::ifstream in(file, std::ios::binary);
  if (!in) {
    r.warning = "kernel cache " + file.string() + " is unreadable; starting cold";
    return r;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.empty()) {
    r.warning = "kernel cache " + file.string() + " is empty; starting cold";
    return r;
  }
  if (text.back() != '\n') {
    r.warning = "kernel cache " + file.string() + " is truncated; starting cold";
    return r;
  }

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line(text.data() + pos, nl - pos);
    ++line_no;
    auto e = parse_line(line);
    if (!e) {
      r.entries.clear();
      r.warning = "kernel cache " + file.string() + " is corrupt at line " +
                  std::to_string(line_no) + "; starting cold";
      return r;
    }
    r.entries.push_back(*e);
    pos = nl + 1;
  }
  return r;
}

void kernel_cache_store(const fs::path& dir, std::vector<KernelCacheEntry> entries) {
  std::vector<std::string> lines;
  lines.reserve(entries.size());
  for (const auto& e : entries) lines.push_back(e.to_line());
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());

  fs::create_directories(dir);
  const fs::path file = dir / manifest_name;
  const fs::path tmp = dir / (std::string(manifest_name) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, file);
}

fs::path default_cache_dir() {
  if (const char* d = std::getenv("KERNEL_CACHE_DIR"); d && *d) return d;
  if (const char* h = std::getenv("HOME"); h && *h) return fs::path(h) / ".quokka";
  return fs::path(".quokka");
}

}  // namespace qk
