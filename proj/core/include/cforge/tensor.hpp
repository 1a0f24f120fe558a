#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cforge::nn {

// Dense 2-D row-major matrix of doubles. Scalars are 1x1, row vectors 1xN,
// column vectors Nx1. Entries are kept finite by every public tape operation.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols);  // zero-filled

  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double value) { return full(1, 1, value); }
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor row(std::vector<double> data);
  static Tensor column(std::vector<double> data);
  static Tensor identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

  bool all_finite() const;
  double item() const;  // value of a 1x1 tensor, contract error otherwise

  std::vector<double> col(std::size_t j) const;
  Tensor rows_subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace cforge::nn
