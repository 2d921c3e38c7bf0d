// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "quokka/expr/expr.hpp"
#include "quokka/tensor/matrix.hpp"

namespace qk::oracle {

/// Naive host evaluator used as a test reference. Every node is computed into
/// its own host temporary, children first, with no rewrites and no fusion.
/// Leaves are read back from the device once each.
HostMatrix tree_walk(const Expr& e);

}  // namespace qk::oracle
