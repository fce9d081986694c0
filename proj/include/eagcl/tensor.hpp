#pragma once

// Dense row-major matrix of doubles. Rank is at most 2; vectors are stored as
// 1xN or Nx1 and scalars as 1x1, which keeps every tape op shape-checked with
// the same machinery.

#include <cstddef>
#include <string>
#include <vector>

#include "eagcl/common.hpp"

namespace eagcl {

class Tensor {
 public:
  Tensor() : rows_(0), cols_(0) {}
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data_[0] = v;
    return t;
  }

  static Tensor from_rows(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols)
      throw ContractError("Tensor::from_rows: have " + std::to_string(values.size()) +
                          " values for shape " + std::to_string(rows) + "x" + std::to_string(cols));
    Tensor t;
    t.rows_ = rows;
    t.cols_ = cols;
    t.data_ = std::move(values);
    return t;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  double item() const {
    if (size() != 1) throw ContractError("Tensor::item on shape " + shape_str());
    return data_[0];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool bitwise_equal(const Tensor& o) const {
    if (!same_shape(o)) return false;
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (data_[i] != o.data_[i]) return false;
    return true;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ContractError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                        b.shape_str());
}

}  // namespace eagcl
