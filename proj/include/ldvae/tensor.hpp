#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ldvae/errors.hpp"

namespace ldvae {

/// Dense row-major matrix of 64-bit floats. Row vectors are 1xN tensors.
class Tensor2 {
public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw ShapeError("tensor data length does not match rows*cols");
  }

  static Tensor2 row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor2(1, n, std::move(values));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const double& at(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row_span(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Tensor2& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const;

  friend bool operator==(const Tensor2& a, const Tensor2& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out = a * b, checked. a is MxK, b is KxN.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);

/// out = a * b', where b' is the transpose of b.
Tensor2 matmul_transpose_b(const Tensor2& a, const Tensor2& b);

/// out = a' * b.
Tensor2 matmul_transpose_a(const Tensor2& a, const Tensor2& b);

void add_in_place(Tensor2& target, const Tensor2& delta);
void scale_in_place(Tensor2& target, double factor);

} // namespace ldvae
