#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "dpobs/errors.hpp"

namespace dpobs {

/// Dense real vector. Entries are validated to be finite on construction.
class Vector {
 public:
  Vector() = default;

  explicit Vector(int dim) : data_(check_dim(dim), 0.0) {}

  Vector(std::initializer_list<double> entries) : data_(entries) {
    check_dim(static_cast<int>(data_.size()));
    validate();
  }

  explicit Vector(std::vector<double> entries) : data_(std::move(entries)) {
    check_dim(static_cast<int>(data_.size()));
    validate();
  }

  int dim() const { return static_cast<int>(data_.size()); }

  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }

  const std::vector<double>& data() const { return data_; }

  double dot(const Vector& other) const {
    require_same_dim(other);
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += data_[i] * other.data_[i];
    return s;
  }

  /// Euclidean (l2) norm.
  double norm() const { return std::sqrt(dot(*this)); }

  Vector& operator+=(const Vector& other) {
    require_same_dim(other);
    for (int i = 0; i < dim(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Vector& operator-=(const Vector& other) {
    require_same_dim(other);
    for (int i = 0; i < dim(); ++i) data_[i] -= other.data_[i];
    return *this;
  }

  Vector& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  friend Vector operator+(Vector a, const Vector& b) { return a += b; }
  friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
  friend Vector operator*(double s, Vector v) { return v *= s; }
  friend Vector operator*(Vector v, double s) { return v *= s; }

  /// Throws if any entry became non-finite (used after in-place updates).
  void validate() const {
    for (double x : data_) {
      if (!std::isfinite(x)) throw domain_error("vector entry is not finite");
    }
  }

 private:
  static int check_dim(int d) {
    if (d <= 0) throw domain_error("vector dimension must be positive");
    return d;
  }

  void require_same_dim(const Vector& other) const {
    if (dim() != other.dim()) throw domain_error("vector dimension mismatch");
  }

  std::vector<double> data_;
};

/// Dense real matrix in row-major order. Entries are validated to be finite
/// on construction, so arithmetic that overflows surfaces as an error rather
/// than propagating NaN/inf.
class Matrix {
 public:
  Matrix() = default;

  Matrix(int rows, int cols)
      : rows_(check_extent(rows)), cols_(check_extent(cols)),
        data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  Matrix(int rows, int cols, std::vector<double> entries)
      : rows_(check_extent(rows)), cols_(check_extent(cols)), data_(std::move(entries)) {
    if (data_.size() != static_cast<std::size_t>(rows_) * cols_)
      throw domain_error("matrix entry count does not equal rows * cols");
    validate();
  }

  /// Builds from nested brace lists; rejects ragged rows.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    if (r == 0) throw domain_error("matrix must have at least one row");
    const int c = static_cast<int>(rows.begin()->size());
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c) throw domain_error("ragged matrix rows");
      int j = 0;
      for (double x : row) m(i, j++) = x;
      ++i;
    }
    m.validate();
    return m;
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator+=(const Matrix& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    validate();
    return *this;
  }

  Matrix& operator-=(const Matrix& other) {
    require_same_shape(other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    validate();
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& x : data_) x *= s;
    validate();
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(double s, Matrix m) { return m *= s; }
  friend Matrix operator*(Matrix m, double s) { return m *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw domain_error("matrix product dimension mismatch");
    Matrix p(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < b.cols_; ++j) p(i, j) += aik * b(k, j);
      }
    p.validate();
    return p;
  }

  friend Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols_ != x.dim()) throw domain_error("matrix-vector dimension mismatch");
    Vector y(a.rows_);
    for (int i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (int j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    y.validate();
    return y;
  }

  /// Outer product u v^T as a dim(u) x dim(v) matrix.
  static Matrix outer(const Vector& u, const Vector& v) {
    Matrix m(u.dim(), v.dim());
    for (int i = 0; i < u.dim(); ++i)
      for (int j = 0; j < v.dim(); ++j) m(i, j) = u[i] * v[j];
    m.validate();
    return m;
  }

  void validate() const {
    for (double x : data_) {
      if (!std::isfinite(x)) throw domain_error("matrix entry is not finite");
    }
  }

 private:
  static int check_extent(int n) {
    if (n <= 0) throw domain_error("matrix extents must be positive");
    return n;
  }

  void require_same_shape(const Matrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
      throw domain_error("matrix shape mismatch");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace dpobs
