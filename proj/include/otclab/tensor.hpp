#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "otclab/errors.hpp"

namespace otclab {

// Dense row-major matrix of doubles. Everything in this project is rank <= 2;
// scalars are 1x1 and row vectors 1xN.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw ShapeError("tensor dims must be nonnegative");
    data_.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), 0.0);
  }
  Tensor(int rows, int cols, std::vector<double> values)
      : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols)) {
      throw ShapeError("value count does not match shape " + shape_str());
    }
  }

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
  static Tensor full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    for (auto& x : t.data_) x = v;
    return t;
  }
  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
  static Tensor row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(1, n, std::move(values));
  }
  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const {
    return "[" + std::to_string(rows_) + "," + std::to_string(cols_) + "]";
  }

  double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row_ptr(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  double item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str());
    return data_[0];
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// C = A * B with A [m,k], B [k,n]. ikj loop order, accumulate in place.
inline void matmul_into(Tensor& c, const Tensor& a, const Tensor& b,
                        bool accumulate = false) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul shape mismatch " + a.shape_str() + " x " + b.shape_str());
  }
  if (!accumulate) c = Tensor(m, n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = b.row_ptr(p);
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

inline Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  Tensor c;
  matmul_into(c, a, b);
  return c;
}

inline Tensor transpose_plain(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

}  // namespace otclab
