// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "quokka/expr/expr.hpp"
#include "quokka/expr/plan.hpp"
#include "quokka/linalg/linalg.hpp"
#include "quokka/runtime/runtime.hpp"
#include "quokka/tensor/functions.hpp"
#include "quokka/tensor/matrix.hpp"
