// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/linalg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "quokka/runtime/runtime.hpp"

namespace qk {

namespace {

using K = kernels::KernelKind;

constexpr int kJacobiMaxSweeps = 30;
constexpr int kSvdMaxSweeps = 60;

void require_float(const Expr& x, const char* fn) {
  if (!is_float(x.elem_type()))
    throw std::invalid_argument(std::string(fn) + "(): requires an f32 or f64 matrix, got " +
                                std::string(to_string(x.elem_type())));
}

void require_square(const Expr& x, const char* fn) {
  if (x.n_rows() != x.n_cols())
    throw std::invalid_argument(std::string(fn) + "(): requires a square matrix, got " + to_string(x.shape()));
}

void launch(K kind, ElemType t, std::vector<DeviceBuffer> in, std::vector<DeviceBuffer> out,
            std::initializer_list<std::uint64_t> geom, std::size_t n_elem = 0) {
  KernelInvocation inv;
  inv.kind = kind;
  inv.in_type = t;
  inv.out_type = t;
  inv.inputs = std::move(in);
  inv.outputs = std::move(out);
  std::copy(geom.begin(), geom.end(), inv.geom.begin());
  inv.n_elem = n_elem;
  Runtime::get().enqueue(std::move(inv));
}

Matrix working_copy(const Expr& x) {
  Matrix w(x.elem_type());
  evaluate(x, w);
  return w;
}

Matrix sized(uword rows, uword cols, ElemType t) {
  Matrix m(t);
  m.set_size(rows, cols);
  return m;
}

/// In-place LU of a working copy: packed factors, row order and status
/// [first zero-pivot column + 1, row swaps].
struct LuFactors {
  Matrix packed;
  Matrix order;
  Matrix status;
  uword n = 0;
};

LuFactors factorize(const Expr& X, const char* fn) {
  require_float(X, fn);
  require_square(X, fn);
  LuFactors f{working_copy(X), Matrix(ElemType::u64), Matrix(ElemType::u64), X.n_rows()};
  f.order.set_size(f.n, 1);
  f.status.set_size(2, 1);
  const ElemType t = X.elem_type();
  for (uword k = 0; k < f.n; ++k)
    launch(K::la_lu_step, t, {}, {f.packed.get_dev_mem(), f.order.get_dev_mem(), f.status.get_dev_mem()},
           {f.n, k});
  return f;
}

void check_nonsingular(const LuFactors& f, const char* fn) {
  if (f.n == 0) return;
  const auto st = f.status.host_values<std::uint64_t>();
  if (st[0] != 0)
    throw SingularMatrixError(std::string(fn) + "(): matrix is singular (no nonzero pivot in column " +
                                  std::to_string(st[0] - 1) + ")",
                              st[0] - 1);
}

Matrix permute_rows(const Matrix& x, const Matrix& order, bool inverse) {
  Matrix out = sized(x.n_rows(), x.n_cols(), x.elem_type());
  if (x.n_elem() > 0)
    launch(K::la_permute_rows, x.elem_type(), {x.get_dev_mem(), order.get_dev_mem()}, {out.get_dev_mem()},
           {x.n_rows(), x.n_cols(), inverse ? 1u : 0u});
  return out;
}

void unpack(const LuFactors& f, Matrix& L, Matrix& U) {
  const ElemType t = f.packed.elem_type();
  Matrix l = sized(f.n, f.n, t), u = sized(f.n, f.n, t);
  if (f.n > 0)
    launch(K::la_triangle, t, {f.packed.get_dev_mem()}, {l.get_dev_mem(), u.get_dev_mem()}, {f.n, 0});
  L = std::move(l);
  U = std::move(u);
}

/// Largest |X(r,c) - X(c,r)| and the Frobenius norm.
std::pair<double, double> symmetry(const Matrix& w) {
  const ElemType t = w.elem_type();
  Matrix s = sized(2, 1, t);
  launch(K::la_sym_dev, t, {w.get_dev_mem()}, {s.get_dev_mem()}, {w.n_rows()});
  const auto v = s.host_values<double>();
  return {v[0], v[1]};
}

void require_symmetric(const Matrix& w, const char* fn) {
  const auto [dev, fro] = symmetry(w);
  if (dev > 1e-5 * fro)
    throw std::invalid_argument(std::string(fn) + "(): matrix is not symmetric (max asymmetry " +
                                std::to_string(dev) + ")");
}

std::vector<double> symmetric_eigenvalues(const Expr& X, const char* fn) {
  require_float(X, fn);
  require_square(X, fn);
  const uword n = X.n_rows();
  if (n == 0) return {};
  Matrix w = working_copy(X);
  require_symmetric(w, fn);
  const double fro = std::sqrt(accu(square(w.expr())));
  const ElemType t = w.elem_type();
  Matrix st = sized(2, 1, t);
  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    launch(K::la_jacobi_sweep, t, {}, {w.get_dev_mem(), st.get_dev_mem()}, {n});
    const auto s = st.host_values<double>();
    if (s[0] <= 1e-10 * fro || s[1] == 0) break;
  }
  Matrix d(diagvec(w.expr()));
  auto ev = d.host_values<double>();
  std::sort(ev.begin(), ev.end());
  return ev;
}

Matrix column_of(const std::vector<double>& v, ElemType t) {
  HostMatrix h(v.size(), 1, ElemType::f64);
  h.values<double>() = v;
  Matrix m(h);
  if (t == ElemType::f64) return m;
  return Matrix(convert(m.expr(), t));
}

/// Pseudo-inverse of a matrix with at least as many rows as columns via
/// one-sided Jacobi: X V = U with orthogonal columns, pinv = V diag(1/|u_j|^2) U^T.
Matrix pinv_tall(const Expr& X) {
  const uword m = X.n_rows(), n = X.n_cols();
  const ElemType t = X.elem_type();
  Matrix u = working_copy(X);
  Matrix v(eye_expr(n, n, t));
  Matrix st = sized(1, 1, t);
  for (int sweep = 0; sweep < kSvdMaxSweeps; ++sweep) {
    launch(K::la_svd_sweep, t, {}, {u.get_dev_mem(), v.get_dev_mem(), st.get_dev_mem()}, {m, n});
    if (st.host_values<double>()[0] == 0) break;
  }
  Matrix norms2(sum(square(u.expr()), 0));
  const auto s2 = norms2.host_values<double>();
  double smax = 0;
  for (double x : s2) smax = std::max(smax, std::sqrt(x));
  std::vector<double> scale(n);
  for (uword j = 0; j < n; ++j) scale[j] = std::sqrt(s2[j]) > 1e-6 * smax ? 1.0 / s2[j] : 0.0;
  Matrix sc = column_of(scale, t);
  launch(K::la_scale_cols, t, {sc.get_dev_mem()}, {v.get_dev_mem()}, {n, n});
  return Matrix(v.expr() * u.t());
}

}  // namespace

// --- PermutationVector ------------------------------------------------------

bool PermutationVector::is_bijection() const {
  const auto v = order.host_values<std::uint64_t>();
  std::vector<bool> seen(v.size(), false);
  for (auto i : v) {
    if (i >= v.size() || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

Matrix PermutationVector::as_matrix(ElemType type) const {
  const uword n = order.n_elem();
  Matrix e(eye_expr(n, n, type));
  return permute_rows(e, order, false);
}

NormKind NormKind::parse(std::string_view s) {
  if (s == "inf") return infinity();
  if (s == "-inf") return neg_infinity();
  if (s == "fro") return frobenius();
  throw std::invalid_argument("norm(): unknown kind \"" + std::string(s) + "\" (expected inf, -inf or fro)");
}

// --- products ---------------------------------------------------------------

Matrix gemm(const Expr& a, const Expr& b) { return Matrix(a * b); }

Matrix gemv(const Expr& a, const Expr& x) {
  if (x.n_cols() != 1) throw std::invalid_argument("gemv(): x must be a column vector, got " + to_string(x.shape()));
  return Matrix(a * x);
}

// --- factorisations ---------------------------------------------------------

void lu(Matrix& L, Matrix& U, PermutationVector& P, const Expr& X) {
  LuFactors f = factorize(X, "lu");
  check_nonsingular(f, "lu");
  unpack(f, L, U);
  P.order = uvec(f.order.expr());
}

void lu(Matrix& L, Matrix& U, Matrix& P, const Expr& X) {
  PermutationVector pv;
  lu(L, U, pv, X);
  P = pv.as_matrix(X.elem_type());
}

void lu(Matrix& L, Matrix& U, const Expr& X) {
  LuFactors f = factorize(X, "lu");
  check_nonsingular(f, "lu");
  Matrix l(X.elem_type());
  unpack(f, l, U);
  L = permute_rows(l, f.order, true);
}

void chol(Matrix& R, const Expr& X) {
  require_float(X, "chol");
  require_square(X, "chol");
  const uword n = X.n_rows();
  const ElemType t = X.elem_type();
  Matrix w = working_copy(X);
  if (n == 0) {
    R = std::move(w);
    return;
  }
  require_symmetric(w, "chol");
  Matrix st(ElemType::u64);
  st.set_size(1, 1);
  for (uword k = 0; k < n; ++k)
    launch(K::la_chol_step, t, {}, {w.get_dev_mem(), st.get_dev_mem()}, {n, k});
  const auto s = st.host_values<std::uint64_t>();
  if (s[0] != 0)
    throw NotPositiveDefiniteError("chol(): matrix is not positive definite (pivot " + std::to_string(s[0] - 1) +
                                       " is not positive)",
                                   s[0] - 1);
  Matrix r = sized(n, n, t);
  launch(K::la_triangle, t, {w.get_dev_mem()}, {r.get_dev_mem()}, {n, 1});
  R = std::move(r);
}

Matrix chol(const Expr& X) {
  Matrix r(X.elem_type());
  chol(r, X);
  return r;
}

Matrix solve(const Expr& A, const Expr& B) {
  if (B.n_rows() != A.n_rows())
    throw std::invalid_argument("solve(): dimension mismatch " + to_string(A.shape()) + " vs " + to_string(B.shape()));
  if (B.elem_type() != A.elem_type())
    throw std::invalid_argument("solve(): element types differ; convert one operand first");
  LuFactors f = factorize(A, "solve");
  check_nonsingular(f, "solve");
  const uword n = f.n, k = B.n_cols();
  const ElemType t = A.elem_type();
  Matrix b = working_copy(B);
  Matrix x = permute_rows(b, f.order, false);
  if (n > 0 && k > 0) {
    launch(K::la_trsm_lower, t, {f.packed.get_dev_mem()}, {x.get_dev_mem()}, {n, k});
    launch(K::la_trsm_upper, t, {f.packed.get_dev_mem()}, {x.get_dev_mem()}, {n, k});
  }
  return x;
}

double det(const Expr& A) {
  LuFactors f = factorize(A, "det");
  if (f.n == 0) return 1.0;
  // A zero pivot column leaves a zero on the diagonal, so the product is 0.
  Matrix d = sized(1, 1, A.elem_type());
  launch(K::la_diag_prod, A.elem_type(), {f.packed.get_dev_mem(), f.status.get_dev_mem()}, {d.get_dev_mem()},
         {f.n});
  return d(0);
}

// --- spectral ---------------------------------------------------------------

Matrix eig_sym(const Expr& X) {
  return column_of(symmetric_eigenvalues(X, "eig_sym"), X.elem_type());
}

Matrix svd(const Expr& X) {
  require_float(X, "svd");
  const Expr gram = X.n_rows() >= X.n_cols() ? X.t() * X : X * X.t();
  auto ev = symmetric_eigenvalues(gram, "svd");
  for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return column_of(ev, X.elem_type());
}

Matrix pinv(const Expr& X) {
  require_float(X, "pinv");
  const uword m = X.n_rows(), n = X.n_cols();
  if (m == 0 || n == 0) return Matrix(fill_expr(n, m, X.elem_type(), 0.0));
  if (m >= n) return pinv_tall(X);
  Matrix xt(X.t());
  Matrix p = pinv_tall(xt.expr());
  return Matrix(p.t());
}

// --- scalar-valued ----------------------------------------------------------

double trace(const Expr& A) {
  require_square(A, "trace");
  if (A.n_elem() == 0) return 0.0;
  return accu(diagvec(A));
}

double norm(const Expr& x, unsigned p) { return norm(x, NormKind::order(p)); }

double norm(const Expr& x, std::string_view kind) { return norm(x, NormKind::parse(kind)); }

double norm(const Expr& x, NormKind kind) {
  if (x.n_elem() == 0) return 0.0;
  const bool vec = x.n_rows() == 1 || x.n_cols() == 1;
  switch (kind.tag) {
    case NormKind::Tag::fro: return std::sqrt(accu(square(x)));
    case NormKind::Tag::inf: return vec ? max(abs(x)) : max(sum(abs(x), 1));
    case NormKind::Tag::neg_inf: return vec ? min(abs(x)) : min(sum(abs(x), 1));
    case NormKind::Tag::p:
      if (!vec) throw std::invalid_argument("norm(): integer p-norms are supported for vectors only; use \"fro\" or \"inf\"");
      if (kind.p == 0) throw std::invalid_argument("norm(): p must be at least 1");
      if (kind.p == 1) return accu(abs(x));
      if (kind.p == 2) return std::sqrt(accu(square(x)));
      return std::pow(accu(pow(abs(x), kind.p)), 1.0 / kind.p);
  }
  return 0.0;
}

double as_scalar(const Expr& x) {
  if (x.n_rows() != 1 || x.n_cols() != 1)
    throw std::invalid_argument("as_scalar(): expression is " + to_string(x.shape()) + ", not 1x1");
  auto s = detail::stage(x);
  return visit_elem_type(s.type, [&](auto tag) {
    using T = typename decltype(tag)::type;
    T v{};
    Runtime::get().copy_to_host(s.buf, 0, std::as_writable_bytes(std::span<T>(&v, 1)));
    return static_cast<double>(v);
  });
}

}  // namespace qk
