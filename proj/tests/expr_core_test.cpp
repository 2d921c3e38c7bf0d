// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixture.hpp"
#include "support/random_dag.hpp"

namespace qk {
namespace {

using testing::CounterWatch;
using testing::oracle_tol;
using testing::RandomDag;
using testing::rel_diff;

class ExprCore : public testing::RuntimeTest<testing::kReference> {};

TEST_F(ExprCore, PlusKeepsShape) {
  fmat A(2, 3, fill::randu), B(2, 3, fill::randu);
  const NodePtr n = build_node(NodeKind::plus, {A.expr().node(), B.expr().node()});
  EXPECT_EQ(n->shape, (Shape{2, 3}));
}

TEST_F(ExprCore, TimesShapeRule) {
  fmat A(2, 3, fill::randu), B(3, 5, fill::randu);
  EXPECT_EQ((A * B).shape(), (Shape{2, 5}));
}

TEST_F(ExprCore, MismatchNamesKindAndShapes) {
  fmat A(2, 3, fill::randu), B(3, 2, fill::randu);
  try {
    build_node(NodeKind::plus, {A.expr().node(), B.expr().node()});
    FAIL() << "expected a dimension mismatch";
  } catch (const std::invalid_argument& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("plus"), std::string::npos) << w;
    EXPECT_NE(w.find("2x3"), std::string::npos) << w;
    EXPECT_NE(w.find("3x2"), std::string::npos) << w;
  }
  EXPECT_THROW(A * A, std::invalid_argument);
  EXPECT_THROW(join_rows(A, fmat(3, 3, fill::zeros)), std::invalid_argument);
  EXPECT_THROW(join_cols(A, fmat(2, 2, fill::zeros)), std::invalid_argument);
}

TEST_F(ExprCore, BuildingPerformsNoDeviceWork) {
  fmat X(4, 4, fill::randu), Y(4, 4, fill::randu);
  CounterWatch w;
  const Expr e = (X + eye<fmat>(4, 4)).t() * (Y + 2) - 3 * square(X) / (abs(Y) + 1);
  const Counters d = w.delta();
  EXPECT_EQ(d.launches, 0u);
  EXPECT_EQ(d.buffers_acquired, 0u);
  EXPECT_EQ(d.transfers_d2h + d.transfers_h2d, 0u);
  fmat Z = e;
  EXPECT_GE(w.delta().launches, 1u);
}

TEST_F(ExprCore, TransOfDiagmatIsUnchanged) {
  fvec V{1, 2, 3};
  const Expr d = diagmat(V);
  const NodePtr r = rewrite_trans(d.node());
  EXPECT_EQ(r.get(), d.node().get());
  EXPECT_EQ(census(r, NodeKind::htrans), 0u);
  EXPECT_EQ(census(trans(d).node(), NodeKind::htrans), 0u);
}

TEST_F(ExprCore, TransOfLeafBuildsHtrans) {
  fmat A(2, 3, fill::randu);
  const NodePtr r = rewrite_trans(A.expr().node());
  EXPECT_EQ(r->kind, NodeKind::htrans);
  EXPECT_EQ(r->operands.at(0)->kind, NodeKind::leaf);
}

TEST_F(ExprCore, DoubleTransposeCollapsesToLeaf) {
  fmat A(3, 5, fill::randu);
  const NodePtr r = rewrite_trans(rewrite_trans(A.expr().node()));
  EXPECT_EQ(r->kind, NodeKind::leaf);
  EXPECT_EQ(census(r, NodeKind::htrans), 0u);
  const NodePtr original = build_node(NodeKind::htrans, {build_node(NodeKind::htrans, {A.expr().node()})});
  EXPECT_EQ(rel_diff(testing::host(Expr(r) + 0), oracle::tree_walk(Expr(original))), 0.0);
}

TEST_F(ExprCore, ShapeOf) {
  fmat A(2, 3), B(4, 7);
  imat C(3, 3, fill::zeros);
  EXPECT_EQ(shape_of(A.t()), (Shape{3, 2}));
  EXPECT_EQ(shape_of(sum(B, 0)), (Shape{1, 7}));
  EXPECT_EQ(shape_of(sum(B, 1)), (Shape{4, 1}));
  EXPECT_EQ(shape_of(convert(resize(C, 5, 6), ElemType::f32)), (Shape{5, 6}));
}

TEST_F(ExprCore, ConvertOverResizeIsOneInvocation) {
  imat A(3, 3, fill::ones);
  const EvalPlan p = plan(convert(resize(A, 5, 6), ElemType::f32), ElemType::f32);
  EXPECT_EQ(p.invocations(), 1u) << p.describe();
  EXPECT_EQ(p.fused_conversions.size(), 1u);
  EXPECT_EQ(p.steps.at(0).in_type, ElemType::i32);
  EXPECT_EQ(p.steps.at(0).out_type, ElemType::f32);
}

TEST_F(ExprCore, LeafPlansToNoInvocations) {
  fmat A(3, 3, fill::randu);
  EXPECT_EQ(plan(A, ElemType::f32).invocations(), 0u);
}

TEST_F(ExprCore, ScaledSumFusesToOneInvocation) {
  fmat A(6, 5, fill::randu), B(6, 5, fill::randu);
  const Expr e = 4 * A.expr() + B - 2;
  EXPECT_EQ(plan(e, ElemType::f32).invocations(), 1u);
  CounterWatch w;
  fmat C = e;
  EXPECT_EQ(w.delta().launches, 1u);
  EXPECT_LE(rel_diff(C.to_host(), oracle::tree_walk(e)), 1e-6);
}

TEST_F(ExprCore, AdditiveIdentity) {
  fmat A(5, 4, fill::randu);
  fmat B = A + 0;
  EXPECT_TRUE(testing::bit_equal(A.to_host(), B.to_host()));
}

TEST_F(ExprCore, MultiplicativeIdentityIsExact) {
  // small integers are exact in f32 and every product/sum stays exact
  fmat A = convert(convert(randu<fmat>(6, 6) * 10.0, ElemType::i32), ElemType::f32);
  fmat C = A * eye<fmat>(6, 6);
  EXPECT_TRUE(testing::bit_equal(A.to_host(), C.to_host()));
}

TEST_F(ExprCore, CompoundExpressionMatchesOracle) {
  fmat X(4, 4, fill::randu), Y(4, 4, fill::randu);
  const Expr e = (X + eye<fmat>(4, 4)).t() * (Y + 2);
  fmat Z = e;
  EXPECT_LE(rel_diff(Z.to_host(), oracle::tree_walk(e)), 1e-5);
}

TEST_F(ExprCore, OracleDiagmat) {
  fvec V{1, 2, 3};
  const HostMatrix h = oracle::tree_walk(diagmat(V));
  ASSERT_EQ(h.n_rows, 3u);
  ASSERT_EQ(h.n_cols, 3u);
  for (uword r = 0; r < 3; ++r)
    for (uword c = 0; c < 3; ++c) EXPECT_EQ(h.get(r, c), r == c ? r + 1.0 : 0.0);
}

TEST_F(ExprCore, OracleNegation) {
  mat A(3, 4, fill::randn);
  const HostMatrix a = A.to_host(), n = oracle::tree_walk(0.0 - A.expr());
  for (uword i = 0; i < a.n_elem(); ++i) EXPECT_EQ(n.get(i), -a.get(i));
}

TEST_F(ExprCore, OracleAgreesWithEvaluateThenAccu) {
  RandomDag g(7);
  for (int i = 0; i < 50; ++i) {
    const Expr e = g.make(4, g.shape(), ElemType::f64);
    const HostMatrix o = oracle::tree_walk(e);
    double ref = 0;
    for (uword j = 0; j < o.n_elem(); ++j) ref += o.get(j);
    const double got = accu(e);
    EXPECT_LE(std::abs(got - ref), 1e-10 * std::max(1.0, std::abs(ref))) << "dag " << i;
  }
}

TEST_F(ExprCore, AliasedElementwiseUpdate) {
  fmat A(7, 3, fill::randu), B(7, 3, fill::randu);
  const HostMatrix expect = oracle::tree_walk(B + 3 * A.expr());
  B += 3 * A.expr();
  EXPECT_LE(rel_diff(B.to_host(), expect), 1e-6);
}

TEST_F(ExprCore, AliasedProductGoesThroughTemporary) {
  mat C(5, 5, fill::randu);
  const HostMatrix expect = oracle::tree_walk(C * C);
  C = C * C;
  EXPECT_LE(rel_diff(C.to_host(), expect), 1e-12);
  C *= C.t();
  EXPECT_EQ(C.shape(), (Shape{5, 5}));
}

TEST_F(ExprCore, LeafAssignmentCopies) {
  fmat A(3, 3, fill::randu);
  fmat B;
  B = A;
  EXPECT_NE(A.get_dev_mem().buffer_id, B.get_dev_mem().buffer_id);
  EXPECT_TRUE(testing::bit_equal(A.to_host(), B.to_host()));
}

TEST_F(ExprCore, TemporariesAreReleased) {
  fmat X(8, 8, fill::randu), Y(8, 8, fill::randu);
  const std::size_t live = Runtime::get().live_buffers();
  {
    fmat Z = (X + 1).t() * (Y - X) + sum(X, 1) * sum(Y, 0);
  }
  EXPECT_EQ(Runtime::get().live_buffers(), live);
}

// --- properties --------------------------------------------------------------

TEST_F(ExprCore, RewriteSoundnessTransDiagmat) {
  RandomDag g(11);
  for (int i = 0; i < 100; ++i) {
    const ElemType t = i % 2 ? ElemType::f32 : ElemType::f64;
    const Expr v = g.make(3, {1 + g.pick(8), 1}, t);
    const NodePtr d = build_node(NodeKind::diagmat, {v.node()});
    const Expr rewritten(rewrite_trans(d));
    const Expr original(build_node(NodeKind::htrans, {d}));
    EXPECT_EQ(census(rewritten.node(), NodeKind::htrans), census(v.node(), NodeKind::htrans));
    EXPECT_LE(rel_diff(testing::host(rewritten), oracle::tree_walk(original)), oracle_tol(t)) << i;
  }
}

TEST_F(ExprCore, RewriteSoundnessDoubleTranspose) {
  RandomDag g(12);
  for (int i = 0; i < 100; ++i) {
    const ElemType t = i % 2 ? ElemType::f32 : ElemType::f64;
    const Expr x = g.make(3, g.shape(), t);
    const Expr rewritten(rewrite_trans(rewrite_trans(x.node())));
    const Expr original(build_node(NodeKind::htrans, {build_node(NodeKind::htrans, {x.node()})}));
    EXPECT_EQ(census(rewritten.node(), NodeKind::htrans), census(x.node(), NodeKind::htrans));
    EXPECT_LE(rel_diff(testing::host(rewritten), oracle::tree_walk(original)), oracle_tol(t)) << i;
  }
}

TEST_F(ExprCore, RewriteSoundnessScalarFolding) {
  RandomDag g(13);
  for (int i = 0; i < 100; ++i) {
    const ElemType t = g.any_type();
    const double k1 = static_cast<double>(g.pick(7)) - 3.0, k2 = static_cast<double>(g.pick(5)) - 2.0;
    const Expr x = g.make(3, g.shape(), t);
    const Expr rewritten = k1 * (k2 * x);
    NodeAux a2, a1;
    a2.k = k2;
    a1.k = k1;
    const Expr original(
        build_node(NodeKind::scalar_times, {build_node(NodeKind::scalar_times, {x.node()}, a2)}, a1));
    EXPECT_LE(rel_diff(testing::host(rewritten), oracle::tree_walk(original)), oracle_tol(t)) << i;
  }
}

TEST_F(ExprCore, ScalarFoldingRemovesANode) {
  fmat A(3, 3, fill::randu);
  const Expr e = 2 * (3 * A.expr());
  EXPECT_EQ(census(e.node(), NodeKind::scalar_times), 1u);
  EXPECT_DOUBLE_EQ(e->aux.k, 6.0);
}

TEST_F(ExprCore, ElementwiseChainsFuseToOneInvocation) {
  fmat A(9, 4, fill::randu), B(9, 4, fill::randu);
  for (int k = 1; k <= 8; ++k) {
    for (bool conv : {false, true}) {
      Expr e = A.expr();
      for (int j = 0; j < k; ++j) e = (j % 3 == 0) ? e + B : (j % 3 == 1) ? e * 0.5 : sin(e);
      if (conv) e = convert(e, ElemType::f64);
      EXPECT_EQ(plan(e, e.elem_type()).invocations(), 1u) << "k=" << k << " conv=" << conv;
      const HostMatrix o = oracle::tree_walk(e);
      EXPECT_LE(rel_diff(testing::host(e), o), conv ? 1e-12 : 1e-5);
    }
  }
}

TEST_F(ExprCore, LongChainsSplit) {
  fmat A(4, 4, fill::randu);
  Expr e = A.expr();
  for (int j = 0; j < 9; ++j) e = e + 1;
  EXPECT_EQ(plan(e, ElemType::f32).invocations(), 2u);
  EXPECT_LE(rel_diff(testing::host(e), oracle::tree_walk(e)), 1e-6);
}

TEST_F(ExprCore, UnfusedPlanHasOneStepPerNode) {
  fmat A(4, 4, fill::randu), B(4, 4, fill::randu);
  PlanOptions o;
  o.fuse_elementwise = false;
  o.fuse_conversions = false;
  EXPECT_EQ(plan(4 * A.expr() + B - 2, ElemType::f32, o).invocations(), 3u);
}

TEST_F(ExprCore, ShapeInferenceIsTotal) {
  RandomDag g(21);
  for (int i = 0; i < 100; ++i) {
    const Expr e = g.make(4, g.shape(), g.any_type());
    CounterWatch w;
    const Shape s = shape_of(e);
    EXPECT_EQ(w.delta().launches, 0u);
    Matrix m = e;
    EXPECT_EQ(m.shape(), s);
    EXPECT_EQ(m.elem_type(), e.elem_type());
  }
}

TEST_F(ExprCore, RandomDagsMatchOracle) {
  RandomDag g(99, 32);
  for (int i = 0; i < 100; ++i) {
    const ElemType t = g.any_type();
    const Expr e = g.make(4, g.shape(), t);
    EXPECT_LE(rel_diff(testing::host(e), oracle::tree_walk(e)), oracle_tol(t)) << "dag " << i;
  }
}

}  // namespace
}  // namespace qk
