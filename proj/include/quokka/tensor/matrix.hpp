// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "quokka/expr/expr.hpp"
#include "quokka/expr/plan.hpp"
#include "quokka/runtime/types.hpp"

namespace qk {

enum class FillKind : std::uint8_t { none, zeros, ones, eye, randu, randn };

namespace fill {
inline constexpr FillKind none = FillKind::none;
inline constexpr FillKind zeros = FillKind::zeros;
inline constexpr FillKind ones = FillKind::ones;
inline constexpr FillKind eye = FillKind::eye;
inline constexpr FillKind randu = FillKind::randu;
inline constexpr FillKind randn = FillKind::randn;
}  // namespace fill

/// Host-resident column-major matrix.
struct HostMatrix {
  using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<std::int32_t>,
                               std::vector<std::uint64_t>>;

  uword n_rows = 0;
  uword n_cols = 0;
  ElemType elem_type = ElemType::f32;
  Storage data = std::vector<float>{};

  HostMatrix() = default;
  HostMatrix(uword rows, uword cols, ElemType t);
  template <Element T>
  HostMatrix(uword rows, uword cols, std::vector<T> values)
      : n_rows(rows), n_cols(cols), elem_type(elem_type_v<T>), data(std::move(values)) {}

  uword n_elem() const noexcept { return n_rows * n_cols; }
  template <Element T> std::vector<T>& values() { return std::get<std::vector<T>>(data); }
  template <Element T> const std::vector<T>& values() const { return std::get<std::vector<T>>(data); }
  /// Element i converted to double.
  double get(uword i) const;
  double get(uword r, uword c) const { return get(r + c * n_rows); }
  std::byte* bytes();
  const std::byte* bytes() const;
};

class Matrix;

/// Reference to one element of a device matrix. Each read is one
/// device-to-host transfer; each write is one host-to-device transfer.
class ElemRef {
 public:
  ElemRef(Matrix& m, uword i) : m_(m), i_(i) {}
  operator double() const;
  template <Element T> T get() const;
  ElemRef& operator=(double v);
  ElemRef& operator=(const ElemRef& o) { return *this = static_cast<double>(o); }
  ElemRef& operator+=(double v) { return *this = static_cast<double>(*this) + v; }
  ElemRef& operator-=(double v) { return *this = static_cast<double>(*this) - v; }
  ElemRef& operator*=(double v) { return *this = static_cast<double>(*this) * v; }
  ElemRef& operator/=(double v) { return *this = static_cast<double>(*this) / v; }

 private:
  Matrix& m_;
  uword i_;
};

enum class SubviewKind : std::uint8_t { submat, row, col, rows, cols, diag };

/// A rectangular region or a diagonal of a matrix. Reads are lazy expressions;
/// writes evaluate the source and scatter it with one insertion kernel.
class Subview {
 public:
  Subview(Matrix& parent, SubviewKind kind, uword r0, uword c0, uword nr, uword nc);
  Subview(Matrix& parent, std::int64_t diag_index);

  Expr expr() const;
  operator Expr() const { return expr(); }
  Shape shape() const;
  uword n_elem() const { return shape().n_elem(); }

  Subview& operator=(const Expr& x);
  Subview& operator=(const Subview& x) { return *this = x.expr(); }
  Subview& operator=(double k);
  Subview& operator+=(const Expr& x);
  Subview& operator-=(const Expr& x);
  Subview& operator%=(const Expr& x);
  Subview& operator/=(const Expr& x);
  Subview& operator+=(double k);
  Subview& operator-=(double k);
  Subview& operator*=(double k);
  Subview& operator/=(double k);
  void fill(double k) { *this = k; }
  void zeros() { *this = 0.0; }
  void ones() { *this = 1.0; }

 private:
  Matrix& parent_;
  SubviewKind kind_;
  uword r0_ = 0, c0_ = 0, nr_ = 0, nc_ = 0;
  std::int64_t diag_ = 0;
};

/// Column-major device matrix with a runtime element type. The typed
/// Mat/Col/Row templates below fix the element type and vector orientation.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(ElemType t) : type_(t) {}
  Matrix(uword rows, uword cols, ElemType t = ElemType::f32, FillKind f = FillKind::none);
  /// Evaluates `e` into a new matrix of the expression's element type.
  Matrix(const Expr& e);  // NOLINT(google-explicit-constructor)
  Matrix(const Subview& s) : Matrix(s.expr()) {}  // NOLINT(google-explicit-constructor)
  explicit Matrix(const HostMatrix& h);
  Matrix(const Matrix& o);
  Matrix(Matrix&& o) noexcept;
  ~Matrix();

  Matrix& operator=(const Matrix& o);
  Matrix& operator=(Matrix&& o);
  Matrix& operator=(const Expr& e);
  Matrix& operator=(const Subview& s) { return *this = s.expr(); }
  Matrix& operator=(double k);

  Matrix& operator+=(const Expr& e);
  Matrix& operator-=(const Expr& e);
  Matrix& operator*=(const Expr& e);  ///< matrix product
  Matrix& operator%=(const Expr& e);
  Matrix& operator/=(const Expr& e);
  Matrix& operator+=(double k);
  Matrix& operator-=(double k);
  Matrix& operator*=(double k);
  Matrix& operator/=(double k);

  /// Leaf expression over this matrix's device memory.
  Expr expr() const;
  operator Expr() const { return expr(); }  // NOLINT(google-explicit-constructor)

  uword n_rows() const noexcept { return rows_; }
  uword n_cols() const noexcept { return cols_; }
  uword n_elem() const noexcept { return rows_ * cols_; }
  Shape shape() const noexcept { return {rows_, cols_}; }
  ElemType elem_type() const noexcept { return type_; }
  /// Raw device buffer handle; no transfer, no copy.
  const DeviceBuffer& get_dev_mem() const noexcept { return mem_; }

  // element access: (i) and (r, c) are bounds-checked; [i] and at(r, c) are not
  ElemRef operator()(uword i);
  ElemRef operator()(uword r, uword c);
  ElemRef operator[](uword i) { return {*this, i}; }
  ElemRef at(uword r, uword c) { return {*this, r + c * rows_}; }
  double operator()(uword i) const;
  double operator()(uword r, uword c) const;

  void set_size(uword rows, uword cols);
  void set_size(uword n);
  /// Keeps the column-major element sequence, truncating or zero-padding.
  void reshape(uword rows, uword cols);
  /// Keeps the overlapping top-left block, zero-filling growth.
  void resize(uword rows, uword cols);
  void reset();
  void fill(double k);
  void zeros();
  void zeros(uword rows, uword cols);
  void ones();
  void ones(uword rows, uword cols);
  void eye();
  void eye(uword rows, uword cols);
  void randu();
  void randu(uword rows, uword cols);
  void randn();
  void randn(uword rows, uword cols);

  Expr t() const { return expr().t(); }
  bool is_empty() const noexcept { return n_elem() == 0; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool is_vec() const noexcept { return rows_ == 1 || cols_ == 1; }
  bool is_colvec() const noexcept { return cols_ == 1; }
  bool is_rowvec() const noexcept { return rows_ == 1; }

  Subview diag(std::int64_t k = 0) { return Subview(*this, k); }
  Subview row(uword r);
  Subview col(uword c);
  Subview rows(uword r0, uword r1);
  Subview cols(uword c0, uword c1);
  Subview submat(uword r0, uword c0, uword r1, uword c1);

  /// Renders rows on separate lines, columns space-separated, preceded by
  /// `header` on its own line when nonempty.
  std::string to_string(const std::string& header = "") const;
  void print(const std::string& header = "") const;
  void print(std::ostream& os, const std::string& header = "") const;

  /// Copies the whole matrix to the host (one transfer).
  HostMatrix to_host() const;
  /// Host values as `T`, converting element-wise when needed.
  template <Element T> std::vector<T> host_values() const;

  /// Low-level: take ownership of `buf` as storage for a rows x cols matrix.
  void adopt(DeviceBuffer buf, uword rows, uword cols);
  /// Low-level: set dimensions without touching storage (requires enough capacity).
  void set_shape(uword rows, uword cols);

 protected:
  enum class Orientation : std::uint8_t { any, col, row };

  Matrix(ElemType t, Orientation o) : type_(t), orient_(o), fixed_type_(true) {}
  void check_orientation(uword rows, uword cols) const;
  void assign(const Expr& e);

  uword rows_ = 0;
  uword cols_ = 0;
  ElemType type_ = ElemType::f32;
  DeviceBuffer mem_{};
  Orientation orient_ = Orientation::any;
  bool fixed_type_ = false;

  friend void evaluate(const Expr& e, Matrix& out, const PlanOptions& opts);
  friend class Subview;
};

/// Evaluates `e` into `out`, converting to out.elem_type() when it differs
/// from the expression's type. `out` may alias any leaf of `e`.
void evaluate(const Expr& e, Matrix& out, const PlanOptions& opts = {});

template <Element eT> class Mat : public Matrix {
 public:
  using elem_type_t = eT;

  Mat() : Matrix(elem_type_v<eT>, Orientation::any) {}
  Mat(uword rows, uword cols, FillKind f = FillKind::none) : Mat() { init(rows, cols, f); }
  Mat(const Expr& e) : Mat() { assign(e); }  // NOLINT(google-explicit-constructor)
  Mat(const Subview& s) : Mat() { assign(s.expr()); }  // NOLINT(google-explicit-constructor)
  /// Column-major values.
  Mat(uword rows, uword cols, const std::vector<eT>& values) : Mat() { init_values(rows, cols, values); }
  /// Row-wise nested list, e.g. {{1, 2}, {3, 4}}.
  Mat(std::initializer_list<std::initializer_list<eT>> rows_list) : Mat() { init_rows(rows_list); }
  explicit Mat(const HostMatrix& h) : Mat() { init_host(h); }
  Mat(const Mat& o) : Mat() { assign(o.expr()); }
  Mat(const Matrix& m) : Mat() { assign(m.expr()); }  // NOLINT(google-explicit-constructor)
  Mat(Matrix&& m) : Mat() { Matrix::operator=(std::move(m)); }  // NOLINT(google-explicit-constructor)
  Mat(Mat&& o) noexcept : Matrix(std::move(o)) {}

  Mat& operator=(const Mat& o) {
    Matrix::operator=(o);
    return *this;
  }
  Mat& operator=(Mat&& o) {
    Matrix::operator=(std::move(o));
    return *this;
  }
  Mat& operator=(const Expr& e) {
    assign(e);
    return *this;
  }
  Mat& operator=(const Subview& s) {
    assign(s.expr());
    return *this;
  }
  Mat& operator=(double k) {
    Matrix::operator=(k);
    return *this;
  }

  /// Bounds-checked typed read (one transfer).
  eT value(uword i) const {
    if (i >= n_elem()) throw std::out_of_range("Mat::value: index out of bounds");
    return ElemRef(const_cast<Mat&>(*this), i).template get<eT>();
  }
  eT value(uword r, uword c) const { return value(r + c * rows_); }

 protected:
  Mat(Orientation o) : Matrix(elem_type_v<eT>, o) {}
  void init(uword rows, uword cols, FillKind f);
  void init_values(uword rows, uword cols, const std::vector<eT>& values);
  void init_rows(std::initializer_list<std::initializer_list<eT>> rows_list);
  void init_host(const HostMatrix& h);
};

template <Element eT> class Col : public Mat<eT> {
 public:
  Col() : Mat<eT>(Matrix::Orientation::col) { this->cols_ = 1; }
  explicit Col(uword n, FillKind f = FillKind::none) : Col() { this->init(n, 1, f); }
  Col(const Expr& e) : Col() { this->assign(e); }  // NOLINT(google-explicit-constructor)
  Col(const Subview& s) : Col() { this->assign(s.expr()); }  // NOLINT(google-explicit-constructor)
  Col(std::initializer_list<eT> values) : Col() { this->init_values(values.size(), 1, values); }
  Col(const std::vector<eT>& values) : Col() { this->init_values(values.size(), 1, values); }
  Col(const Col& o) : Col() { this->assign(o.expr()); }
  Col(const Matrix& m) : Col() { this->assign(m.expr()); }  // NOLINT(google-explicit-constructor)
  Col(Matrix&& m) : Col() { Matrix::operator=(std::move(m)); }  // NOLINT(google-explicit-constructor)
  Col(Col&& o) noexcept : Mat<eT>(std::move(o)) {}
  Col& operator=(const Col& o) {
    Matrix::operator=(o);
    return *this;
  }
  Col& operator=(Col&& o) {
    Matrix::operator=(std::move(o));
    return *this;
  }
  Col& operator=(const Expr& e) {
    this->assign(e);
    return *this;
  }
};

template <Element eT> class Row : public Mat<eT> {
 public:
  Row() : Mat<eT>(Matrix::Orientation::row) { this->rows_ = 1; }
  explicit Row(uword n, FillKind f = FillKind::none) : Row() { this->init(1, n, f); }
  Row(const Expr& e) : Row() { this->assign(e); }  // NOLINT(google-explicit-constructor)
  Row(const Subview& s) : Row() { this->assign(s.expr()); }  // NOLINT(google-explicit-constructor)
  Row(std::initializer_list<eT> values) : Row() { this->init_values(1, values.size(), values); }
  Row(const std::vector<eT>& values) : Row() { this->init_values(1, values.size(), values); }
  Row(const Row& o) : Row() { this->assign(o.expr()); }
  Row(const Matrix& m) : Row() { this->assign(m.expr()); }  // NOLINT(google-explicit-constructor)
  Row(Matrix&& m) : Row() { Matrix::operator=(std::move(m)); }  // NOLINT(google-explicit-constructor)
  Row(Row&& o) noexcept : Mat<eT>(std::move(o)) {}
  Row& operator=(const Row& o) {
    Matrix::operator=(o);
    return *this;
  }
  Row& operator=(Row&& o) {
    Matrix::operator=(std::move(o));
    return *this;
  }
  Row& operator=(const Expr& e) {
    this->assign(e);
    return *this;
  }
};

using fmat = Mat<float>;
using mat = Mat<double>;
using imat = Mat<std::int32_t>;
using umat = Mat<uword>;
using fvec = Col<float>;
using vec = Col<double>;
using ivec = Col<std::int32_t>;
using uvec = Col<uword>;
using frowvec = Row<float>;
using rowvec = Row<double>;
using irowvec = Row<std::int32_t>;
using urowvec = Row<uword>;

template <class M> struct mat_traits;
template <Element eT> struct mat_traits<Mat<eT>> {
  static constexpr ElemType type = elem_type_v<eT>;
};
template <Element eT> struct mat_traits<Col<eT>> {
  static constexpr ElemType type = elem_type_v<eT>;
};
template <Element eT> struct mat_traits<Row<eT>> {
  static constexpr ElemType type = elem_type_v<eT>;
};

/// Conversions between element types and between host and device.
template <class Target> struct conv_to {
  static Target from(const Expr& e) { return Target(convert(e, mat_traits<Target>::type)); }
  static Target from(const Matrix& m) { return from(m.expr()); }
  static Target from(const Subview& s) { return from(s.expr()); }
  static Target from(const HostMatrix& h) { return Target(h); }
};

template <> struct conv_to<HostMatrix> {
  static HostMatrix from(const Matrix& m) { return m.to_host(); }
  static HostMatrix from(const Expr& e) { return Matrix(e).to_host(); }
};

// generators as lazy expressions, e.g. eye<fmat>(3, 3)
template <class M> Expr zeros(uword rows, uword cols) {
  return fill_expr(rows, cols, mat_traits<M>::type, 0.0);
}
template <class M> Expr ones(uword rows, uword cols) {
  return fill_expr(rows, cols, mat_traits<M>::type, 1.0);
}
template <class M> Expr eye(uword rows, uword cols) { return eye_expr(rows, cols, mat_traits<M>::type); }
template <class M> Expr randu(uword rows, uword cols) {
  return randu_expr(rows, cols, mat_traits<M>::type);
}
template <class M> Expr randn(uword rows, uword cols) {
  return randn_expr(rows, cols, mat_traits<M>::type);
}
/// Column of n points from start to end inclusive.
template <class M> Expr linspace(double start, double end, uword n) {
  return linspace_expr(start, end, n, mat_traits<M>::type);
}

// --- template definitions -------------------------------------------------

template <Element T> std::vector<T> Matrix::host_values() const {
  const HostMatrix h = to_host();
  if (h.elem_type == elem_type_v<T>) return h.values<T>();
  std::vector<T> out(h.n_elem());
  std::visit(
      [&](const auto& v) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = convert_elem<T>(v[i]);
      },
      h.data);
  return out;
}

template <Element eT> void Mat<eT>::init(uword rows, uword cols, FillKind f) {
  switch (f) {
    case FillKind::none: set_size(rows, cols); break;
    case FillKind::zeros: zeros(rows, cols); break;
    case FillKind::ones: ones(rows, cols); break;
    case FillKind::eye: eye(rows, cols); break;
    case FillKind::randu: randu(rows, cols); break;
    case FillKind::randn: randn(rows, cols); break;
  }
}

template <Element eT> void Mat<eT>::init_values(uword rows, uword cols, const std::vector<eT>& values) {
  if (values.size() != rows * cols) throw std::invalid_argument("Mat: value count does not match the shape");
  init_host(HostMatrix(rows, cols, values));
}

template <Element eT>
void Mat<eT>::init_rows(std::initializer_list<std::initializer_list<eT>> rows_list) {
  const uword r = rows_list.size();
  const uword c = r ? rows_list.begin()->size() : 0;
  std::vector<eT> v(r * c);
  uword i = 0;
  for (const auto& row : rows_list) {
    if (row.size() != c) throw std::invalid_argument("Mat: ragged initializer list");
    uword j = 0;
    for (eT x : row) v[i + (j++) * r] = x;
    ++i;
  }
  init_values(r, c, v);
}

template <Element eT> void Mat<eT>::init_host(const HostMatrix& h) {
  Matrix m(h);
  if (m.elem_type() != elem_type_v<eT>)
    assign(convert(m.expr(), elem_type_v<eT>));
  else
    Matrix::operator=(std::move(m));
}

}  // namespace qk
