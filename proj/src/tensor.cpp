#include "ldvae/tensor.hpp"

#include <cmath>

namespace ldvae {

bool Tensor2::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions disagree (" +
                     std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  Tensor2 out(a.rows(), b.cols());
  // ikj order keeps b row-contiguous in the inner loop.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = &out.at(i, 0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* b_row = &b.at(k, 0);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Tensor2 matmul_transpose_b(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_transpose_b: inner dimensions disagree");
  Tensor2 out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* a_row = &a.at(i, 0);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* b_row = &b.at(j, 0);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor2 matmul_transpose_a(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_transpose_a: inner dimensions disagree");
  Tensor2 out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* a_row = &a.at(k, 0);
    const double* b_row = &b.at(k, 0);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      double* out_row = &out.at(i, 0);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

void add_in_place(Tensor2& target, const Tensor2& delta) {
  if (!target.same_shape(delta))
    throw ShapeError("add_in_place: shape mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] += delta[i];
}

void scale_in_place(Tensor2& target, double factor) {
  for (std::size_t i = 0; i < target.size(); ++i) target[i] *= factor;
}

} // namespace ldvae
