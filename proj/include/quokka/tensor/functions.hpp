// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "quokka/tensor/matrix.hpp"

namespace qk {

// Scalar reductions. Each evaluates its operand (unless it is a bare matrix),
// runs one reduction kernel and reads back one element.

double accu(const Expr& x);
/// Sum left on the device as a 1x1 matrix; no transfer.
void accu(const Expr& x, Matrix& out);
double dot(const Expr& a, const Expr& b);
/// Smallest element; throws std::invalid_argument on an empty operand.
double min(const Expr& x);
double max(const Expr& x);

/// Ascending column-major indices of nonzero elements.
uvec find(const Expr& x);
/// Ascending column-major indices of elements satisfying the relation.
uvec find(const Relation& r);
/// Number of elements satisfying the relation, without materialising indices.
uword count(const Relation& r);

bool all(const Expr& x);
bool all(const Relation& r);
bool any(const Expr& x);
bool any(const Relation& r);

namespace detail {

/// The relation actually tested on elements of type `t`: integer inputs get an
/// integral threshold so that e.g. `A >= 0.5` on i32 behaves as `A >= 1`.
struct TypedRelation {
  RelOp op;
  double k;
};
TypedRelation lower_relation(RelOp op, double k, ElemType t);

/// Device-resident operand for a terminal kernel: a bare matrix is used in
/// place, anything else is evaluated into `tmp`.
struct Staged {
  Matrix tmp;
  DeviceBuffer buf;
  Shape shape;
  ElemType type;
};
Staged stage(const Expr& x);

}  // namespace detail

}  // namespace qk
