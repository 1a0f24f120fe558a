#include "cforge/tensor.hpp"

#include <cmath>

#include "cforge/error.hpp"

namespace cforge::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  Tensor t(rows, cols);
  for (auto& x : t.data_) x = value;
  return t;
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    fail(errc::shape, "data length " + std::to_string(data.size()) + " does not match shape " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::row(std::vector<double> data) {
  std::size_t n = data.size();
  return from(1, n, std::move(data));
}

Tensor Tensor::column(std::vector<double> data) {
  std::size_t n = data.size();
  return from(n, 1, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::string Tensor::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    fail(errc::contract, "expected a scalar tensor, got " + shape_str());
  }
  return data_[0];
}

std::vector<double> Tensor::col(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = at(i, j);
  return out;
}

Tensor Tensor::rows_subset(const std::vector<std::size_t>& indices) const {
  Tensor out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out.at(i, j) = at(indices[i], j);
  }
  return out;
}

}  // namespace cforge::nn
