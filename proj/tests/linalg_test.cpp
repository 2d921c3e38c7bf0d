// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include "support/fixture.hpp"

namespace qk {
namespace {

using testing::bit_equal;
using testing::host_fro;
using testing::host_fro_diff;

class Linalg : public testing::RuntimeTest<testing::kReference> {
 protected:
  void TearDown() override {
    testing::RuntimeTest<testing::kReference>::TearDown();
    testing::ensure_backend("reference");
  }
};

/// Seeded, well-conditioned square input: randu + c*I.
template <class M> M conditioned(uword n, double c) {
  return M(randu<M>(n, n) + c * eye<M>(n, n));
}

/// Seeded SPD input with eigenvalues in a moderate range.
template <class M> M spd(uword n) {
  M A(n, n, fill::randu);
  return M(A.t() * A * (0.5 / static_cast<double>(n)) + eye<M>(n, n));
}

template <class M> double lu_residual(const M& X) {
  Matrix L, U, P;
  lu(L, U, P, X);
  return host_fro_diff(testing::host(P * X.expr()), testing::host(L * U.expr())) / host_fro(X.to_host());
}

std::vector<double> values(const Matrix& m) { return m.host_values<double>(); }

TEST_F(Linalg, ProductWithIdentity) {
  fmat A(8, 8, fill::randu);
  Matrix C = gemm(A, eye<fmat>(8, 8));
  EXPECT_TRUE(bit_equal(A.to_host(), C.to_host()));
}

TEST_F(Linalg, RowTimesColumn) {
  frowvec a{1, 2, 3};
  fvec b{2, 2, 2};
  Matrix c = gemm(a, b);
  ASSERT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_EQ(c(0), 12.0);
  EXPECT_THROW(gemm(a, a), std::invalid_argument);
}

TEST_F(Linalg, ProductMatchesTripleLoop) {
  fmat A(64, 64, fill::randu), B(64, 64, fill::randu);
  const HostMatrix a = A.to_host(), b = B.to_host(), c = gemm(A, B).to_host();
  HostMatrix ref(64, 64, ElemType::f64);
  for (uword i = 0; i < 64; ++i)
    for (uword j = 0; j < 64; ++j) {
      double s = 0;
      for (uword k = 0; k < 64; ++k) s += a.get(i, k) * b.get(k, j);
      ref.values<double>()[i + j * 64] = s;
    }
  EXPECT_LE(testing::rel_diff(c, ref), 1e-5);
}

TEST_F(Linalg, MatrixVector) {
  mat A(2, 2, std::vector<double>{1, 3, 2, 4});
  vec x{1, 1};
  EXPECT_EQ(values(gemv(A, x)), (std::vector<double>{3, 7}));
}

TEST_F(Linalg, LuOfIdentity) {
  mat I(5, 5, fill::eye);
  Matrix L, U;
  PermutationVector P;
  lu(L, U, P, I);
  EXPECT_TRUE(bit_equal(L.to_host(), I.to_host()));
  EXPECT_TRUE(bit_equal(U.to_host(), I.to_host()));
  EXPECT_EQ(P.order.host_values<uword>(), (std::vector<uword>{0, 1, 2, 3, 4}));
}

TEST_F(Linalg, LuPivotsOnSwap) {
  mat X{{0, 1}, {1, 0}};
  Matrix L, U;
  PermutationVector P;
  lu(L, U, P, X);
  EXPECT_EQ(P.order.host_values<uword>(), (std::vector<uword>{1, 0}));
  Matrix Pm = P.as_matrix(ElemType::f64);
  EXPECT_TRUE(bit_equal(testing::host(Pm * X.expr()), testing::host(L * U.expr())));
}

TEST_F(Linalg, LuResidualF32) {
  set_seed(42);
  EXPECT_LE(lu_residual(conditioned<fmat>(128, 0.5)), 1e-4);
}

TEST_F(Linalg, LuResidualF64) {
  set_seed(42);
  EXPECT_LE(lu_residual(conditioned<mat>(128, 0.5)), 1e-10);
}

TEST_F(Linalg, FoldedLuCarriesPermutation) {
  set_seed(4);
  mat X = conditioned<mat>(16, 0.5);
  Matrix Lf, U, L, P;
  lu(Lf, U, X);
  EXPECT_LE(host_fro_diff(testing::host(Lf * U.expr()), X.to_host()) / host_fro(X.to_host()), 1e-12);
  lu(L, U, P, X);
  EXPECT_LE(testing::rel_diff(Lf.to_host(), testing::host(P.t() * L.expr())), 0.0);
}

TEST_F(Linalg, LuRejectsSingular) {
  mat X{{1, 2, 3}, {2, 4, 6}, {0, 0, 0}};
  Matrix L, U;
  try {
    lu(L, U, X);
    FAIL() << "expected a singular-matrix error";
  } catch (const SingularMatrixError& e) {
    EXPECT_LT(e.column(), 3u);
  }
  EXPECT_THROW(lu(L, U, mat(2, 3, fill::ones)), std::invalid_argument);
}

TEST_F(Linalg, PermutationIsBijection) {
  set_seed(11);
  fmat X = conditioned<fmat>(40, 0.1);
  Matrix L, U;
  PermutationVector P;
  lu(L, U, P, X);
  EXPECT_TRUE(P.is_bijection());
  auto order = P.order.host_values<uword>();
  std::sort(order.begin(), order.end());
  std::vector<uword> iota(40);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(order, iota);
}

TEST_F(Linalg, CholOfIdentity) {
  mat I(4, 4, fill::eye);
  EXPECT_TRUE(bit_equal(chol(I).to_host(), I.to_host()));
}

TEST_F(Linalg, CholOfDiagonal) {
  mat D = diagmat(vec{4, 9});
  EXPECT_EQ(values(chol(D)), (std::vector<double>{2, 0, 0, 3}));
}

TEST_F(Linalg, CholResidual) {
  set_seed(42);
  const uword n = 128;
  fmat A(n, n, fill::randu);
  fmat X = A.t() * A + static_cast<double>(n) * eye<fmat>(n, n);
  Matrix R = chol(X);
  const HostMatrix r = R.to_host();
  for (uword c = 0; c < n; ++c)
    for (uword rr = c + 1; rr < n; ++rr) ASSERT_EQ(r.get(rr, c), 0.0);
  EXPECT_LE(host_fro_diff(X.to_host(), testing::host(R.t() * R.expr())) / host_fro(X.to_host()), 1e-5);
}

TEST_F(Linalg, CholNamesFailingPivot) {
  mat X{{4, 2, 0}, {2, 1, 0}, {0, 0, 1}};
  try {
    chol(X);
    FAIL() << "expected a not-positive-definite error";
  } catch (const NotPositiveDefiniteError& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
  EXPECT_THROW(chol(mat{{1, 2}, {0, 1}}), std::invalid_argument);
}

TEST_F(Linalg, SolveIdentity) {
  mat B(4, 3, fill::randu);
  EXPECT_LE(testing::rel_diff(solve(eye<mat>(4, 4), B).to_host(), B.to_host()), 0.0);
}

TEST_F(Linalg, SolveDiagonal) {
  EXPECT_EQ(values(solve(diagmat(vec{2, 4}), vec{2, 8})), (std::vector<double>{1, 2}));
}

TEST_F(Linalg, SolveResidual) {
  set_seed(42);
  fmat A = conditioned<fmat>(100, 10);
  fmat B(100, 3, fill::randu);
  Matrix X = solve(A, B);
  EXPECT_LE(host_fro_diff(testing::host(A * X.expr()), B.to_host()) / host_fro(B.to_host()), 1e-4);
  EXPECT_THROW(solve(mat(3, 3, fill::zeros), vec(3, fill::ones)), SingularMatrixError);
}

TEST_F(Linalg, Determinants) {
  EXPECT_EQ(det(eye<mat>(5, 5)), 1.0);
  EXPECT_EQ(det(mat{{0, 1}, {1, 0}}), -1.0);
  EXPECT_EQ(det(2.0 * eye<mat>(3, 3)), 8.0);
  EXPECT_EQ(det(mat{{1, 2}, {2, 4}}), 0.0);
  EXPECT_NEAR(det(mat{{3, 8}, {4, 6}}), -14.0, 1e-12);
}

TEST_F(Linalg, EigOfIdentity) {
  EXPECT_EQ(values(eig_sym(eye<mat>(4, 4))), (std::vector<double>{1, 1, 1, 1}));
}

TEST_F(Linalg, EigOfDiagonalIsSorted) {
  EXPECT_EQ(values(eig_sym(diagmat(vec{3, 1, 2}))), (std::vector<double>{1, 2, 3}));
}

TEST_F(Linalg, EigOfTwoByTwo) {
  const auto v = values(eig_sym(mat{{2, 1}, {1, 2}}));
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v[0], 1.0, 1e-12);
  EXPECT_NEAR(v[1], 3.0, 1e-12);
  EXPECT_THROW(eig_sym(mat{{1, 5}, {0, 1}}), std::invalid_argument);
}

TEST_F(Linalg, SingularValuesOfDiagonals) {
  EXPECT_EQ(values(svd(eye<mat>(3, 3))), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(values(svd(diagmat(vec{3, 4}))), (std::vector<double>{4, 3}));
  const auto wide = values(svd(mat{{3, 0, 0}, {0, 4, 0}}));
  EXPECT_EQ(wide.size(), 2u);
  EXPECT_NEAR(wide[0], 4.0, 1e-12);
}

TEST_F(Linalg, PseudoInversePenroseIdentities) {
  set_seed(42);
  fmat A(20, 10, fill::randu);
  fmat Ap = pinv(A);
  ASSERT_EQ(Ap.shape(), (Shape{10, 20}));
  const HostMatrix a = A.to_host(), ap = Ap.to_host();
  EXPECT_LE(host_fro_diff(testing::host(A * Ap * A), a) / host_fro(a), 1e-3);
  EXPECT_LE(host_fro_diff(testing::host(Ap * A * Ap), ap) / host_fro(ap), 1e-3);
  fmat W = A.t();
  fmat Wp = pinv(W);
  EXPECT_LE(host_fro_diff(testing::host(W * Wp * W), W.to_host()) / host_fro(W.to_host()), 1e-3);
}

TEST_F(Linalg, PseudoInverseDropsTinySingularValues) {
  mat A = diagmat(vec{2, 0, 4});
  EXPECT_EQ(values(pinv(A)), (std::vector<double>{0.5, 0, 0, 0, 0, 0, 0, 0, 0.25}));
}

TEST_F(Linalg, ScalarFunctions) {
  EXPECT_EQ(trace(eye<mat>(7, 7)), 7.0);
  EXPECT_EQ(norm(vec{3, 4}, 2), 5.0);
  EXPECT_EQ(norm(vec{3, -4}, 1), 7.0);
  EXPECT_NEAR(norm(vec{1, 2, 2}, 3), std::cbrt(17.0), 1e-12);
  EXPECT_EQ(norm(vec{3, -4}, "inf"), 4.0);
  EXPECT_EQ(norm(vec{3, -4}, "-inf"), 3.0);
  mat M{{1, -2}, {3, 4}};
  EXPECT_EQ(norm(M, "inf"), 7.0);
  EXPECT_EQ(norm(M, "-inf"), 3.0);
  EXPECT_NEAR(norm(M, "fro"), std::sqrt(30.0), 1e-12);
  EXPECT_THROW(norm(M, 1), std::invalid_argument);
  EXPECT_THROW(NormKind::parse("nuclear"), std::invalid_argument);
}

TEST_F(Linalg, AsScalarOfInnerProduct) {
  frowvec a{1, 2, 3};
  fvec b{2, 2, 2};
  testing::CounterWatch w;
  EXPECT_EQ(as_scalar(a * b), 12.0);
  EXPECT_EQ(w.delta().transfers_d2h, 1u);
  EXPECT_THROW(as_scalar(b * a), std::invalid_argument);
}

// --- properties --------------------------------------------------------------

TEST_F(Linalg, ReconstructionAcrossSizes) {
  for (uword n : {8u, 32u, 128u}) {
    set_seed(100 + n);
    EXPECT_LE(lu_residual(conditioned<fmat>(n, 0.5)), 1e-4) << n;
    EXPECT_LE(lu_residual(conditioned<mat>(n, 0.5)), 1e-10) << n;
    fmat X = spd<fmat>(n);
    Matrix R = chol(X);
    EXPECT_LE(host_fro_diff(X.to_host(), testing::host(R.t() * R.expr())) / host_fro(X.to_host()), 1e-5) << n;
  }
}

TEST_F(Linalg, SpectralConsistency) {
  for (uword n : {4u, 16u, 64u}) {
    set_seed(200 + n);
    mat X = spd<mat>(n);
    const auto lam = values(eig_sym(X));
    const double s = std::accumulate(lam.begin(), lam.end(), 0.0);
    const double p = std::accumulate(lam.begin(), lam.end(), 1.0, std::multiplies<>());
    EXPECT_NEAR(s / trace(X), 1.0, 1e-3) << n;
    EXPECT_NEAR(p / det(X), 1.0, 1e-3) << n;
  }
}

TEST_F(Linalg, DeterminantIsMultiplicative) {
  for (uword n : {2u, 5u, 16u}) {
    set_seed(300 + n);
    mat A = conditioned<mat>(n, 1.0), B = conditioned<mat>(n, 1.0);
    const double lhs = det(A * B.expr()), rhs = det(A) * det(B);
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-3) << n;
  }
}

TEST_F(Linalg, BackendsAgree) {
  std::vector<std::vector<double>> results[2];
  const char* backends[] = {"reference", "parallel"};
  for (int b = 0; b < 2; ++b) {
    testing::use_backend(backends[b], 0, b ? 4 : 0);
    set_seed(77);
    fmat X = conditioned<fmat>(48, 1.0);
    fmat S = spd<fmat>(24);
    Matrix L, U, P;
    lu(L, U, P, X);
    results[b].push_back(U.host_values<double>());
    results[b].push_back(chol(S).host_values<double>());
    results[b].push_back(solve(X, fmat(48, 2, fill::randu)).host_values<double>());
    results[b].push_back(eig_sym(S).host_values<double>());
    results[b].push_back(svd(X).host_values<double>());
    results[b].push_back(pinv(fmat(12, 6, fill::randu)).host_values<double>());
    results[b].push_back({det(S), trace(X), norm(X, "fro")});
  }
  for (std::size_t i = 0; i < results[0].size(); ++i) {
    ASSERT_EQ(results[0][i].size(), results[1][i].size());
    double num = 0, den = 0;
    for (std::size_t j = 0; j < results[0][i].size(); ++j) {
      num = std::max(num, std::abs(results[0][i][j] - results[1][i][j]));
      den = std::max(den, std::abs(results[0][i][j]));
    }
    EXPECT_LE(num, 1e-6 * den) << "result " << i;
  }
}

}  // namespace
}  // namespace qk
