// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "quokka/kernels/kernel_set.hpp"
#include "support/fixture.hpp"

namespace qk {
namespace {

using kernels::KernelKind;
using kernels::KernelSignature;
using testing::bit_equal;
using testing::CounterWatch;
using testing::rel_diff;

class KernelSet : public testing::RuntimeTest<testing::kReference> {
 protected:
  void TearDown() override {
    testing::RuntimeTest<testing::kReference>::TearDown();
    testing::ensure_backend("reference");
  }
};

TEST(KernelInventory, EveryKindHasSource) {
  for (KernelKind k : kernels::all_kernel_kinds) {
    const std::string src = kernels::source_text({k, ElemType::f32, ElemType::f32});
    EXPECT_FALSE(src.empty()) << kernels::to_string(k);
    EXPECT_NE(src.find(std::string(kernels::to_string(k))), std::string::npos) << kernels::to_string(k);
  }
}

TEST(KernelInventory, TwoWayPairsAreExactlyTheMixedOnes) {
  const auto inv = kernels::inventory(true);
  const std::set<KernelSignature> have(inv.begin(), inv.end());
  EXPECT_EQ(have.size(), inv.size()) << "duplicate signatures";
  for (KernelKind k : kernels::all_kernel_kinds) {
    for (ElemType in : all_elem_types) {
      for (ElemType out : all_elem_types) {
        const bool present = have.count({k, in, out}) > 0;
        if (kernels::float_only(k)) {
          EXPECT_EQ(present, in == out && is_float(in)) << kernels::to_string(k);
          continue;
        }
        switch (kernels::type_policy(k)) {
          case kernels::TypePolicy::two_way: EXPECT_TRUE(present) << kernels::to_string(k); break;
          case kernels::TypePolicy::same: EXPECT_EQ(present, in == out) << kernels::to_string(k); break;
          case kernels::TypePolicy::to_index:
            EXPECT_EQ(present, out == ElemType::u64) << kernels::to_string(k);
            break;
        }
      }
    }
  }
}

TEST(KernelInventory, NoF64KernelsWithoutCapability) {
  for (const auto& s : kernels::inventory(false)) {
    EXPECT_NE(s.in_type, ElemType::f64) << kernels::to_string(s.kind);
    EXPECT_NE(s.out_type, ElemType::f64) << kernels::to_string(s.kind);
  }
}

TEST(KernelInventory, KindNamesRoundTrip) {
  for (KernelKind k : kernels::all_kernel_kinds) EXPECT_EQ(kernels::parse_kernel_kind(kernels::to_string(k)), k);
  EXPECT_FALSE(kernels::parse_kernel_kind("no_such_kernel").has_value());
}

TEST_F(KernelSet, ScalarMinusPreAtZeroNegates) {
  fmat A(6, 3, fill::randn);
  fmat N = 0.0 - A.expr();
  const auto a = A.host_values<float>(), n = N.host_values<float>();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(n[i], -a[i]);
}

TEST_F(KernelSet, DivideBySelfIsOnes) {
  fmat A = randu<fmat>(8, 8) + 0.5;
  fmat Q = A / A;
  for (float v : Q.host_values<float>()) EXPECT_EQ(v, 1.0f);
}

TEST_F(KernelSet, FusedChainOneLaunchMatchesOracle) {
  fmat A(30, 20, fill::randu), B(30, 20, fill::randu);
  const Expr e = A * 4.0 + B - 2;
  CounterWatch w;
  fmat C = e;
  EXPECT_EQ(w.delta().launches, 1u);
  EXPECT_LE(rel_diff(C.to_host(), oracle::tree_walk(e)), 1e-6);
}

TEST_F(KernelSet, FusedChainDepthIsCapped) {
  fmat A(4, 4, fill::ones), B(4, 4, fill::zeros);
  auto prog = std::make_shared<kernels::FusedProgram>();
  prog->n_inputs = 1;
  prog->code.push_back(kernels::Instr::load_input(0));
  for (int i = 0; i < 9; ++i) prog->code.push_back(kernels::Instr::unary(ElemOp::scalar_plus, 1.0));
  KernelInvocation inv;
  inv.kind = KernelKind::fused_chain;
  inv.inputs = {A.get_dev_mem()};
  inv.outputs = {B.get_dev_mem()};
  inv.n_elem = 16;
  inv.program = prog;
  EXPECT_THROW(kernels::validate(inv), std::invalid_argument);
  prog->code.pop_back();
  EXPECT_NO_THROW(kernels::validate(inv));
}

TEST_F(KernelSet, AccuOfOnesIsExact) {
  fvec v(1000, fill::ones);
  CounterWatch w;
  EXPECT_EQ(accu(v), 1000.0);
  EXPECT_EQ(w.delta().transfers_d2h, 1u);
}

TEST_F(KernelSet, DotProduct) {
  fvec a{1, 2, 3}, b{2, 2, 2};
  EXPECT_EQ(dot(a, b), 12.0);
  EXPECT_THROW(dot(a, fvec{1, 2}), std::invalid_argument);
}

TEST_F(KernelSet, EmptyReductions) {
  fmat E;
  EXPECT_EQ(accu(E), 0.0);
  EXPECT_THROW(min(E.expr()), std::invalid_argument);
  EXPECT_THROW(max(E.expr()), std::invalid_argument);
}

TEST_F(KernelSet, IntegerReductionsAreExact) {
  imat A(100, 100, fill::ones);
  A *= 214748;
  EXPECT_EQ(accu(A), 2147480000.0);  // not representable in f32
  umat U(3, 1, std::vector<uword>{5, 1, 9});
  EXPECT_EQ(min(U.expr()), 1.0);
  EXPECT_EQ(max(U.expr()), 9.0);
}

TEST_F(KernelSet, SumOfEyeByColumns) {
  fmat I(3, 3, fill::eye);
  frowvec s = sum(I, 0);
  EXPECT_EQ(s.host_values<float>(), (std::vector<float>{1, 1, 1}));
}

TEST_F(KernelSet, VarianceOfConstantIsZero) {
  mat C(4, 6, fill::ones);
  C *= 3.7;
  for (int dim : {0, 1}) {
    mat v = var(C, dim);
    for (double x : v.host_values<double>()) EXPECT_EQ(x, 0.0) << "dim " << dim;
    mat s = stddev(C, dim);
    for (double x : s.host_values<double>()) EXPECT_EQ(x, 0.0) << "dim " << dim;
  }
}

TEST_F(KernelSet, MeanAndVarianceMatchTwoPassHostLoop) {
  set_seed(42);
  fmat A(5, 4, fill::randu);
  const HostMatrix h = A.to_host();
  for (int dim : {0, 1}) {
    const uword groups = dim == 0 ? 4 : 5, extent = dim == 0 ? 5 : 4;
    std::vector<double> mean_ref(groups), var_ref(groups);
    for (uword g = 0; g < groups; ++g) {
      double s = 0;
      for (uword j = 0; j < extent; ++j) s += dim == 0 ? h.get(j, g) : h.get(g, j);
      mean_ref[g] = s / static_cast<double>(extent);
      double ss = 0;
      for (uword j = 0; j < extent; ++j) {
        const double d = (dim == 0 ? h.get(j, g) : h.get(g, j)) - mean_ref[g];
        ss += d * d;
      }
      var_ref[g] = ss / static_cast<double>(extent - 1);
    }
    const auto m = Matrix(mean(A, dim)).host_values<double>();
    const auto v = Matrix(var(A, dim)).host_values<double>();
    const auto sd = Matrix(stddev(A, dim)).host_values<double>();
    for (uword g = 0; g < groups; ++g) {
      EXPECT_NEAR(m[g], mean_ref[g], 1e-6) << dim;
      EXPECT_NEAR(v[g], var_ref[g], 1e-6) << dim;
      EXPECT_NEAR(sd[g], std::sqrt(var_ref[g]), 1e-6) << dim;
    }
  }
}

TEST_F(KernelSet, MinMaxByDimension) {
  fmat A(2, 3, std::vector<float>{1, 5, -2, 0, 7, 3});
  EXPECT_EQ(Matrix(min(A, 0)).host_values<float>(), (std::vector<float>{1, -2, 3}));
  EXPECT_EQ(Matrix(max(A, 1)).host_values<float>(), (std::vector<float>{7, 5}));
}

TEST_F(KernelSet, LinspaceIncludesEndpoint) {
  vec l = linspace<vec>(0, 1, 3);
  EXPECT_EQ(l.host_values<double>(), (std::vector<double>{0, 0.5, 1}));
  vec one = linspace<vec>(5, 5, 1);
  EXPECT_EQ(one.host_values<double>(), (std::vector<double>{5}));
  fvec f = linspace<fvec>(-1, 3, 101);
  EXPECT_EQ(f.value(100), 3.0f);
}

TEST_F(KernelSet, RepmatIdentityAndTiling) {
  imat A(2, 2, std::vector<std::int32_t>{1, 2, 3, 4});
  imat R = repmat(A, 1, 1);
  EXPECT_TRUE(bit_equal(A.to_host(), R.to_host()));
  imat T = repmat(A, 2, 3);
  EXPECT_EQ(T.shape(), (Shape{4, 6}));
  const HostMatrix h = T.to_host();
  for (uword r = 0; r < 4; ++r)
    for (uword c = 0; c < 6; ++c) EXPECT_EQ(h.get(r, c), 1 + (r % 2) + 2 * (c % 2));
}

TEST_F(KernelSet, TransposeIsAnInvolution) {
  fmat A(7, 3, fill::randu);
  // built without rewrites so both transposes really run
  const Expr tt(build_node(NodeKind::htrans, {build_node(NodeKind::htrans, {A.expr().node()})}));
  CounterWatch w;
  fmat B = tt;
  EXPECT_EQ(w.delta().launches, 2u);
  EXPECT_TRUE(bit_equal(A.to_host(), B.to_host()));
  fmat T = A.t();
  EXPECT_EQ(T.value(2, 6), A.value(6, 2));
}

TEST_F(KernelSet, ResizeGrowthZeroFills) {
  fmat A(2, 2, fill::ones);
  fmat R = resize(A, 3, 3);
  EXPECT_EQ(R.host_values<float>(), (std::vector<float>{1, 1, 0, 1, 1, 0, 0, 0, 0}));
}

TEST_F(KernelSet, JoinsStackAndWiden) {
  fmat A(2, 3, std::vector<float>{1, 2, 3, 4, 5, 6});
  fmat B(2, 3, std::vector<float>{7, 8, 9, 10, 11, 12});
  fmat V = join_cols(A, B);
  ASSERT_EQ(V.shape(), (Shape{4, 3}));
  EXPECT_EQ(V.host_values<float>(), (std::vector<float>{1, 2, 7, 8, 3, 4, 9, 10, 5, 6, 11, 12}));
  fmat H = join_rows(A, B);
  ASSERT_EQ(H.shape(), (Shape{2, 6}));
  EXPECT_EQ(H.host_values<float>(), (std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  EXPECT_LE(rel_diff(V.to_host(), oracle::tree_walk(join_cols(A, B))), 0.0);
}

TEST_F(KernelSet, DiagmatAndDiagvec) {
  fvec v{1, 2, 3};
  fmat D = diagmat(v);
  EXPECT_EQ(accu(D), 6.0);
  EXPECT_EQ(D.value(2, 2), 3.0f);
  fvec back = diagvec(D);
  EXPECT_EQ(back.host_values<float>(), (std::vector<float>{1, 2, 3}));
}

TEST_F(KernelSet, FindOnZerosIsEmpty) {
  fmat Z(3, 3, fill::zeros);
  uvec idx = find(Z);
  EXPECT_EQ(idx.n_elem(), 0u);
  EXPECT_EQ(idx.n_cols(), 1u);
}

TEST_F(KernelSet, FindOnEyeIsColumnMajor) {
  fmat I(3, 3, fill::eye);
  EXPECT_EQ(find(I).host_values<uword>(), (std::vector<uword>{0, 4, 8}));
}

TEST_F(KernelSet, RelationalCountMatchesHostLoop) {
  set_seed(42);
  fmat A(1000, 1000, fill::randu);
  const auto h = A.host_values<float>();
  uword ref = 0;
  for (float x : h) ref += x > 0.3f;
  CounterWatch w;
  const uword n = count(A.expr() > 0.3);
  EXPECT_EQ(n, ref);
  EXPECT_LE(w.delta().transfers_d2h, 2u);
  CounterWatch w2;
  const uvec idx = find(A.expr() > 0.3);
  EXPECT_EQ(idx.n_elem(), ref);
  EXPECT_LE(w2.delta().transfers_d2h, 2u);
}

TEST_F(KernelSet, AllAndAny) {
  fmat A(3, 3, fill::ones);
  EXPECT_TRUE(all(A));
  EXPECT_TRUE(any(A));
  A(1, 1) = 0;
  EXPECT_FALSE(all(A));
  EXPECT_TRUE(any(A));
  EXPECT_TRUE(all(A.expr() >= 0));
  EXPECT_FALSE(any(A.expr() > 1));
  EXPECT_FALSE(any(fmat(2, 2, fill::zeros)));
}

TEST_F(KernelSet, IntegerThresholdsAreLowered) {
  imat A(1, 5, std::vector<std::int32_t>{-2, -1, 0, 1, 2});
  EXPECT_EQ(count(A.expr() >= 0.5), 2u);
  EXPECT_EQ(count(A.expr() > 0.5), 2u);
  EXPECT_EQ(count(A.expr() < -0.5), 2u);
  EXPECT_EQ(count(A.expr() <= -0.5), 2u);
  EXPECT_EQ(count(A.expr() == 0.5), 0u);
  EXPECT_EQ(count(A.expr() != 0.5), 5u);
  umat U(1, 3, std::vector<uword>{0, 1, 2});
  EXPECT_EQ(count(U.expr() > -1), 3u);
  EXPECT_EQ(count(U.expr() < -1), 0u);
}

// --- properties --------------------------------------------------------------

TEST_F(KernelSet, KernelsArePureAcrossReruns) {
  for (const char* backend : {"reference", "parallel"}) {
    testing::use_backend(backend);
    set_seed(9);
    fmat A(300, 40, fill::randn);
    fmat r1 = sin(A) % A + 2, r2 = sin(A) % A + 2;
    EXPECT_TRUE(bit_equal(r1.to_host(), r2.to_host())) << backend;
    fmat g1 = A * A.t(), g2 = A * A.t();
    EXPECT_TRUE(bit_equal(g1.to_host(), g2.to_host())) << backend;
  }
}

TEST_F(KernelSet, TwoWayMatchesStandaloneConversion) {
  PlanOptions unfused;
  unfused.fuse_conversions = false;
  set_seed(5);
  mat src = randn<mat>(40, 30) * 50.0;
  for (ElemType from : all_elem_types) {
    Matrix x = convert(src, from);
    const std::vector<Expr> fusable = {
        x.expr() * 3.0 + 1, resize(x, 50, 20), reshape(x, 20, 60), abs(x) - 7,
        fill_expr(6, 6, from, 2.75)};
    for (ElemType to : all_elem_types) {
      if (to == from) continue;
      for (std::size_t i = 0; i < fusable.size(); ++i) {
        const Expr e = convert(fusable[i], to);
        ASSERT_EQ(plan(e, to).invocations(), 1u) << i;
        Matrix fused(to), split(to);
        evaluate(e, fused);
        evaluate(e, split, unfused);
        const HostMatrix a = fused.to_host(), b = split.to_host();
        if (is_float(to)) {
          for (uword j = 0; j < a.n_elem(); ++j) {
            const double u = a.get(j), v = b.get(j);
            const double ulp = to == ElemType::f32
                                   ? std::abs(std::nextafter(static_cast<float>(v), INFINITY) - static_cast<float>(v))
                                   : std::abs(std::nextafter(v, INFINITY) - v);
            EXPECT_LE(std::abs(u - v), ulp) << to_string(from) << "->" << to_string(to) << " expr " << i;
          }
        } else {
          EXPECT_TRUE(bit_equal(a, b)) << to_string(from) << "->" << to_string(to) << " expr " << i;
        }
      }
    }
  }
}

TEST_F(KernelSet, ReductionsAreBitIdenticalAcrossWorkerCounts) {
  set_seed(3);
  const HostMatrix data = testing::host(randn<fmat>(100003, 1) * 1000.0);
  std::vector<double> sums;
  std::vector<HostMatrix> colsums;
  auto run = [&] {
    fmat v(data);
    sums.push_back(accu(v));
    colsums.push_back(testing::host(sum(reshape(v, 1009, 99), 0)));
  };
  testing::use_backend("reference");
  run();
  for (std::size_t w : {1u, 2u, 8u}) {
    testing::use_backend("parallel", 0, w);
    run();
  }
  for (std::size_t i = 1; i < sums.size(); ++i) {
    EXPECT_EQ(sums[i], sums[0]) << i;
    EXPECT_TRUE(bit_equal(colsums[i], colsums[0])) << i;
  }
}

TEST_F(KernelSet, FindIsStrictlyAscending) {
  set_seed(8);
  for (const char* backend : {"reference", "parallel"}) {
    testing::use_backend(backend, 0, std::string(backend) == "parallel" ? 4 : 0);
    fmat A(20000, 3, fill::randu);
    const auto idx = find(A.expr() < 0.25).host_values<uword>();
    EXPECT_GT(idx.size(), 0u);
    EXPECT_TRUE(std::adjacent_find(idx.begin(), idx.end(), std::greater_equal<>()) == idx.end()) << backend;
  }
}

}  // namespace
}  // namespace qk
