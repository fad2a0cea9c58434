#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace guardfl {

using Vec = std::vector<double>;

// Dense row-major matrix. Small sizes only (client counts and feature
// widths at desk scale), so no blocking or vectorization tricks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  void fill(double value) { data_.assign(data_.size(), value); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
// out = a + factor * b, shapes must match.
Matrix add_scaled(const Matrix& a, const Matrix& b, double factor);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> a, std::span<const double> b);
// Defined as 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

void axpy(double factor, std::span<const double> x, std::span<double> y);
void scale_inplace(std::span<double> v, double factor);

}  // namespace guardfl
