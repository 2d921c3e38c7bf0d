// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/tensor/matrix.hpp"

#include <charconv>
#include <cmath>
#include <iostream>
#include <sstream>

#include "quokka/runtime/runtime.hpp"

namespace qk {

// --- HostMatrix -------------------------------------------------------------

HostMatrix::HostMatrix(uword rows, uword cols, ElemType t) : n_rows(rows), n_cols(cols), elem_type(t) {
  visit_elem_type(t, [&](auto tag) {
    using T = typename decltype(tag)::type;
    data = std::vector<T>(rows * cols);
  });
}

double HostMatrix::get(uword i) const {
  return std::visit([i](const auto& v) { return static_cast<double>(v.at(i)); }, data);
}

std::byte* HostMatrix::bytes() {
  return std::visit([](auto& v) { return reinterpret_cast<std::byte*>(v.data()); }, data);
}

const std::byte* HostMatrix::bytes() const {
  return std::visit([](const auto& v) { return reinterpret_cast<const std::byte*>(v.data()); }, data);
}

// --- ElemRef ----------------------------------------------------------------

namespace {

template <Element T> T read_elem(const DeviceBuffer& buf, uword i) {
  return visit_elem_type(buf.elem_type, [&](auto tag) {
    using S = typename decltype(tag)::type;
    S v{};
    Runtime::get().copy_to_host(buf, i, std::as_writable_bytes(std::span<S>(&v, 1)));
    return convert_elem<T>(v);
  });
}

}  // namespace

ElemRef::operator double() const { return get<double>(); }

template <Element T> T ElemRef::get() const { return read_elem<T>(m_.get_dev_mem(), i_); }

template float ElemRef::get<float>() const;
template double ElemRef::get<double>() const;
template std::int32_t ElemRef::get<std::int32_t>() const;
template std::uint64_t ElemRef::get<std::uint64_t>() const;

ElemRef& ElemRef::operator=(double v) {
  const DeviceBuffer& buf = m_.get_dev_mem();
  visit_elem_type(buf.elem_type, [&](auto tag) {
    using S = typename decltype(tag)::type;
    const S x = convert_elem<S>(v);
    Runtime::get().copy_from_host(std::as_bytes(std::span<const S>(&x, 1)), buf, i_);
  });
  return *this;
}

// --- Matrix -----------------------------------------------------------------

Matrix::Matrix(uword rows, uword cols, ElemType t, FillKind f) : type_(t) {
  switch (f) {
    case FillKind::none: set_size(rows, cols); break;
    case FillKind::zeros: zeros(rows, cols); break;
    case FillKind::ones: ones(rows, cols); break;
    case FillKind::eye: eye(rows, cols); break;
    case FillKind::randu: randu(rows, cols); break;
    case FillKind::randn: randn(rows, cols); break;
  }
}

Matrix::Matrix(const Expr& e) : type_(e.elem_type()) { evaluate(e, *this); }

Matrix::Matrix(const HostMatrix& h) : type_(h.elem_type) {
  set_size(h.n_rows, h.n_cols);
  if (h.n_elem() > 0)
    Runtime::get().copy_from_host(std::span<const std::byte>(h.bytes(), h.n_elem() * elem_size(h.elem_type)),
                                  mem_, 0);
}

Matrix::Matrix(const Matrix& o) : type_(o.type_), orient_(o.orient_), fixed_type_(o.fixed_type_) {
  if (o.mem_.valid()) evaluate(o.expr(), *this);
  rows_ = o.rows_;
  cols_ = o.cols_;
}

Matrix::Matrix(Matrix&& o) noexcept
    : rows_(o.rows_), cols_(o.cols_), type_(o.type_), mem_(o.mem_), orient_(o.orient_), fixed_type_(o.fixed_type_) {
  o.mem_ = {};
  o.rows_ = o.orient_ == Orientation::row ? 1 : 0;
  o.cols_ = o.orient_ == Orientation::col ? 1 : 0;
}

Matrix::~Matrix() {
  if (mem_.valid()) Runtime::get().release(mem_);
}

Matrix& Matrix::operator=(const Matrix& o) {
  if (this == &o) return *this;
  assign(o.expr());
  return *this;
}

Matrix& Matrix::operator=(Matrix&& o) {
  if (this == &o) return *this;
  if ((fixed_type_ && o.type_ != type_) ||
      (orient_ == Orientation::col && o.cols_ != 1 && o.n_elem() != 0) ||
      (orient_ == Orientation::row && o.rows_ != 1 && o.n_elem() != 0)) {
    // Incompatible target: fall back to a converting/checked copy.
    assign(o.expr());
    return *this;
  }
  if (mem_.valid()) Runtime::get().release(mem_);
  mem_ = o.mem_;
  rows_ = o.rows_;
  cols_ = o.cols_;
  type_ = o.type_;
  if (orient_ == Orientation::col && n_elem() == 0) cols_ = 1;
  if (orient_ == Orientation::row && n_elem() == 0) rows_ = 1;
  o.mem_ = {};
  o.rows_ = o.orient_ == Orientation::row ? 1 : 0;
  o.cols_ = o.orient_ == Orientation::col ? 1 : 0;
  return *this;
}

Matrix& Matrix::operator=(const Expr& e) {
  assign(e);
  return *this;
}

Matrix& Matrix::operator=(double k) {
  set_size(1, 1);
  fill(k);
  return *this;
}

void Matrix::assign(const Expr& e) {
  if (fixed_type_ && e.elem_type() != type_)
    throw std::invalid_argument("assignment of a " + std::string(qk::to_string(e.elem_type())) +
                                " expression to a " + std::string(qk::to_string(type_)) +
                                " matrix; use conv_to");
  type_ = e.elem_type();
  evaluate(e, *this);
}

Matrix& Matrix::operator+=(const Expr& e) { return *this = expr() + e; }
Matrix& Matrix::operator-=(const Expr& e) { return *this = expr() - e; }
Matrix& Matrix::operator*=(const Expr& e) { return *this = expr() * e; }
Matrix& Matrix::operator%=(const Expr& e) { return *this = expr() % e; }
Matrix& Matrix::operator/=(const Expr& e) { return *this = expr() / e; }
Matrix& Matrix::operator+=(double k) { return *this = expr() + k; }
Matrix& Matrix::operator-=(double k) { return *this = expr() - k; }
Matrix& Matrix::operator*=(double k) { return *this = expr() * k; }
Matrix& Matrix::operator/=(double k) { return *this = expr() / k; }

Expr Matrix::expr() const {
  DeviceBuffer b = mem_;
  if (!b.valid()) b.elem_type = type_;
  return Expr(build_leaf(b, {rows_, cols_}));
}

ElemRef Matrix::operator()(uword i) {
  if (i >= n_elem())
    throw std::out_of_range("Matrix(): index " + std::to_string(i) + " out of bounds for " +
                            std::to_string(n_elem()) + " elements");
  return {*this, i};
}

ElemRef Matrix::operator()(uword r, uword c) {
  if (r >= rows_ || c >= cols_)
    throw std::out_of_range("Matrix(): (" + std::to_string(r) + ", " + std::to_string(c) +
                            ") out of bounds for " + qk::to_string(shape()));
  return {*this, r + c * rows_};
}

double Matrix::operator()(uword i) const { return const_cast<Matrix&>(*this)(i); }
double Matrix::operator()(uword r, uword c) const { return const_cast<Matrix&>(*this)(r, c); }

void Matrix::check_orientation(uword rows, uword cols) const {
  if (orient_ == Orientation::col && cols != 1 && rows * cols != 0)
    throw std::invalid_argument("column vector cannot hold a " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " result");
  if (orient_ == Orientation::row && rows != 1 && rows * cols != 0)
    throw std::invalid_argument("row vector cannot hold a " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " result");
}

void Matrix::adopt(DeviceBuffer buf, uword rows, uword cols) {
  if (mem_.valid() && mem_.buffer_id != buf.buffer_id) Runtime::get().release(mem_);
  mem_ = buf;
  set_shape(rows, cols);
}

void Matrix::set_shape(uword rows, uword cols) {
  check_orientation(rows, cols);
  if (rows * cols > 0 && (!mem_.valid() || mem_.length < rows * cols))
    throw std::logic_error("set_shape: storage too small");
  rows_ = rows;
  cols_ = cols;
  if (rows * cols == 0 && orient_ == Orientation::col) rows_ = 0, cols_ = 1;
  if (rows * cols == 0 && orient_ == Orientation::row) rows_ = 1, cols_ = 0;
}

void Matrix::set_size(uword rows, uword cols) {
  check_orientation(rows, cols);
  auto& rt = Runtime::get();
  const uword n = rows * cols;
  if (!mem_.valid() || mem_.length != n || mem_.elem_type != type_) {
    DeviceBuffer b = rt.acquire_memory(n, type_);
    adopt(b, rows, cols);
  } else {
    set_shape(rows, cols);
  }
}

void Matrix::set_size(uword n) {
  if (orient_ == Orientation::row)
    set_size(1, n);
  else
    set_size(n, 1);
}

void Matrix::reshape(uword rows, uword cols) {
  if (rows * cols == n_elem() && mem_.valid()) {
    set_shape(rows, cols);
    return;
  }
  evaluate(qk::reshape(expr(), rows, cols), *this);
}

void Matrix::resize(uword rows, uword cols) { evaluate(qk::resize(expr(), rows, cols), *this); }

void Matrix::reset() {
  if (mem_.valid()) Runtime::get().release(mem_);
  mem_ = {};
  rows_ = orient_ == Orientation::row ? 1 : 0;
  cols_ = orient_ == Orientation::col ? 1 : 0;
}

void Matrix::fill(double k) { evaluate(fill_expr(rows_, cols_, type_, k), *this); }
void Matrix::zeros() { fill(0.0); }
void Matrix::zeros(uword rows, uword cols) { evaluate(fill_expr(rows, cols, type_, 0.0), *this); }
void Matrix::ones() { fill(1.0); }
void Matrix::ones(uword rows, uword cols) { evaluate(fill_expr(rows, cols, type_, 1.0), *this); }
void Matrix::eye() { eye(rows_, cols_); }
void Matrix::eye(uword rows, uword cols) { evaluate(eye_expr(rows, cols, type_), *this); }
void Matrix::randu() { randu(rows_, cols_); }
void Matrix::randu(uword rows, uword cols) { evaluate(randu_expr(rows, cols, type_), *this); }
void Matrix::randn() { randn(rows_, cols_); }
void Matrix::randn(uword rows, uword cols) { evaluate(randn_expr(rows, cols, type_), *this); }

Subview Matrix::row(uword r) { return Subview(*this, SubviewKind::row, r, 0, 1, cols_); }
Subview Matrix::col(uword c) { return Subview(*this, SubviewKind::col, 0, c, rows_, 1); }
Subview Matrix::rows(uword r0, uword r1) {
  if (r1 < r0) throw std::invalid_argument("rows(): last row before first row");
  return Subview(*this, SubviewKind::rows, r0, 0, r1 - r0 + 1, cols_);
}
Subview Matrix::cols(uword c0, uword c1) {
  if (c1 < c0) throw std::invalid_argument("cols(): last column before first column");
  return Subview(*this, SubviewKind::cols, 0, c0, rows_, c1 - c0 + 1);
}
Subview Matrix::submat(uword r0, uword c0, uword r1, uword c1) {
  if (r1 < r0 || c1 < c0) throw std::invalid_argument("submat(): last index before first index");
  return Subview(*this, SubviewKind::submat, r0, c0, r1 - r0 + 1, c1 - c0 + 1);
}

HostMatrix Matrix::to_host() const {
  HostMatrix h(rows_, cols_, type_);
  if (n_elem() > 0)
    Runtime::get().copy_to_host(mem_, 0, std::span<std::byte>(h.bytes(), n_elem() * elem_size(type_)));
  return h;
}

namespace {

template <class T> void append_value(std::string& s, T v) {
  char buf[64];
  std::to_chars_result r;
  if constexpr (std::is_floating_point_v<T>) {
    if (v == T{0}) v = T{0};  // print -0 as 0
    r = std::to_chars(buf, buf + sizeof buf, v);
  } else {
    r = std::to_chars(buf, buf + sizeof buf, v);
  }
  s.append(buf, r.ptr);
}

}  // namespace

std::string Matrix::to_string(const std::string& header) const {
  std::string s;
  if (!header.empty()) {
    s += header;
    s += '\n';
  }
  if (n_elem() == 0) {
    s += "[matrix size: " + qk::to_string(shape()) + "]\n";
    return s;
  }
  const HostMatrix h = to_host();
  std::visit(
      [&](const auto& v) {
        for (uword r = 0; r < rows_; ++r) {
          for (uword c = 0; c < cols_; ++c) {
            if (c) s += ' ';
            append_value(s, v[r + c * rows_]);
          }
          s += '\n';
        }
      },
      h.data);
  return s;
}

void Matrix::print(const std::string& header) const { print(std::cout, header); }

void Matrix::print(std::ostream& os, const std::string& header) const { os << to_string(header); }

// --- Subview ----------------------------------------------------------------

Subview::Subview(Matrix& parent, SubviewKind kind, uword r0, uword c0, uword nr, uword nc)
    : parent_(parent), kind_(kind), r0_(r0), c0_(c0), nr_(nr), nc_(nc) {
  if (r0 + nr > parent.n_rows() || c0 + nc > parent.n_cols())
    throw std::out_of_range("subview (" + std::to_string(r0) + ", " + std::to_string(c0) + ") + " +
                            std::to_string(nr) + "x" + std::to_string(nc) + " exceeds " +
                            qk::to_string(parent.shape()));
}

Subview::Subview(Matrix& parent, std::int64_t diag_index)
    : parent_(parent), kind_(SubviewKind::diag), diag_(diag_index) {
  const auto r = static_cast<std::int64_t>(parent.n_rows()), c = static_cast<std::int64_t>(parent.n_cols());
  if ((diag_index >= 0 && diag_index >= std::max<std::int64_t>(c, 1)) ||
      (diag_index < 0 && -diag_index >= std::max<std::int64_t>(r, 1)))
    throw std::out_of_range("diag(" + std::to_string(diag_index) + ") out of range for " +
                            qk::to_string(parent.shape()));
  r0_ = diag_index < 0 ? static_cast<uword>(-diag_index) : 0;
  c0_ = diag_index > 0 ? static_cast<uword>(diag_index) : 0;
  nr_ = static_cast<uword>(std::max<std::int64_t>(
      0, diag_index >= 0 ? std::min(r, c - diag_index) : std::min(r + diag_index, c)));
  nc_ = 1;
}

Shape Subview::shape() const { return {nr_, nc_}; }

Expr Subview::expr() const {
  if (kind_ == SubviewKind::diag) return diagvec(parent_.expr(), diag_);
  return submat(parent_.expr(), r0_, c0_, r0_ + nr_ - 1, c0_ + nc_ - 1);
}

Subview& Subview::operator=(const Expr& x) {
  const Shape s = x.shape();
  const bool ok = kind_ == SubviewKind::diag ? (s.n_elem() == nr_ && (s.rows == 1 || s.cols == 1))
                                             : (s == Shape{nr_, nc_});
  if (!ok)
    throw std::invalid_argument("subview assignment: dimension mismatch " + qk::to_string(Shape{nr_, nc_}) +
                                " vs " + qk::to_string(s));
  if (nr_ * nc_ == 0) return *this;
  Matrix tmp(x);  // evaluated first, so the source may read the parent
  const uword R = parent_.n_rows();
  KernelInvocation inv;
  inv.kind = kernels::KernelKind::mov_insert;
  inv.in_type = tmp.elem_type();
  inv.out_type = parent_.elem_type();
  inv.inputs = {tmp.get_dev_mem()};
  inv.outputs = {parent_.get_dev_mem()};
  inv.n_elem = nr_ * nc_;
  if (kind_ == SubviewKind::diag)
    inv.geom = {r0_ + c0_ * R, 1, 1, nr_, R + 1};
  else
    inv.geom = {r0_ + c0_ * R, nr_, 1, nc_, R};
  Runtime::get().enqueue(std::move(inv));
  return *this;
}

Subview& Subview::operator=(double k) {
  return *this = fill_expr(kind_ == SubviewKind::diag ? nr_ : nr_, nc_, parent_.elem_type(), k);
}

Subview& Subview::operator+=(const Expr& x) { return *this = expr() + x; }
Subview& Subview::operator-=(const Expr& x) { return *this = expr() - x; }
Subview& Subview::operator%=(const Expr& x) { return *this = expr() % x; }
Subview& Subview::operator/=(const Expr& x) { return *this = expr() / x; }
Subview& Subview::operator+=(double k) { return *this = expr() + k; }
Subview& Subview::operator-=(double k) { return *this = expr() - k; }
Subview& Subview::operator*=(double k) { return *this = expr() * k; }
Subview& Subview::operator/=(double k) { return *this = expr() / k; }

}  // namespace qk
