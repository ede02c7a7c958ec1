#include "mmvae/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace mmvae {

Tensor::Tensor(int rows_in, int cols_in, double fill)
    : rows(rows_in), cols(cols_in), data(static_cast<size_t>(rows_in) * cols_in, fill) {
  if (rows_in < 0 || cols_in < 0) throw std::invalid_argument("tensor: negative shape");
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values) {
  if (values.size() != static_cast<size_t>(rows) * cols) {
    throw std::invalid_argument("tensor: data length does not match shape");
  }
  Tensor t;
  t.rows = rows;
  t.cols = cols;
  t.data = std::move(values);
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return from(1, n, std::move(values));
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
  Tensor out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

void add_in_place(Tensor& into, const Tensor& from) {
  if (!into.same_shape(from)) throw std::invalid_argument("add_in_place: shape mismatch");
  for (int i = 0; i < into.numel(); ++i) into.data[i] += from.data[i];
}

void scale_in_place(Tensor& t, double factor) {
  for (double& v : t.data) v *= factor;
}

}  // namespace mmvae
