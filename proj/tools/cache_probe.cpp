// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

// Initialises the runtime once and prints the kernel-cache counters as JSON.
// Used to observe warm starts across separate processes.

#include <json.hpp>

#include <iostream>
#include <string>

#include "quokka/runtime/runtime.hpp"

int main(int argc, char** argv) {
  qk::RuntimeOptions opts;
  opts.backend = argc > 1 ? argv[1] : "reference";
  opts.device_id = argc > 2 ? std::stoi(argv[2]) : 0;
  if (argc > 3) opts.library_version = argv[3];
  auto& rt = qk::Runtime::get();
  try {
    rt.init(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  const auto c = rt.counters_snapshot();
  nlohmann::json j;
  j["compiles"] = c.compiles;
  j["cache_hits"] = c.cache_hits;
  j["inventory"] = rt.kernel_inventory_size();
  j["cache_dir"] = rt.cache_dir();
  j["warnings"] = rt.warnings();
  std::cout << j.dump() << '\n';
  return 0;
}
