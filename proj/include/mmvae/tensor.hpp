#pragma once

#include <cstddef>
#include <vector>

namespace mmvae {

// Dense row-major matrix of doubles. Vectors are 1xD or Dx1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);
  static Tensor from(int rows, int cols, std::vector<double> values);
  static Tensor row(std::vector<double> values);

  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  int numel() const { return rows * cols; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
void add_in_place(Tensor& into, const Tensor& from);
void scale_in_place(Tensor& t, double factor);

}  // namespace mmvae
