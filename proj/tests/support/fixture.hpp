// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gtest/gtest.h>

#include "support/helpers.hpp"

namespace qk::testing {

/// Seeds the runtime on a chosen backend and audits that every buffer a test
/// acquired has been released by the time its locals are gone.
template <const char* Backend> class RuntimeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ensure_backend(Backend);
    set_seed(42);
    live_ = Runtime::get().live_buffers();
    start_ = Runtime::get().counters_snapshot();
  }
  void TearDown() override {
    auto& rt = Runtime::get();
    if (!rt.initialized()) return;
    EXPECT_EQ(rt.live_buffers(), live_) << "device buffers leaked";
    const Counters d = rt.counters_snapshot() - start_;
    EXPECT_EQ(d.buffers_acquired, d.buffers_released) << "acquire/release imbalance";
  }

 private:
  std::size_t live_ = 0;
  Counters start_;
};

inline constexpr char kReference[] = "reference";
inline constexpr char kParallel[] = "parallel";

}  // namespace qk::testing
