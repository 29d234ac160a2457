#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cgt {

/// Small dense row-major matrix. Sized for rotation blocks, CG projections
/// and graph Laplacians of a few hundred nodes.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(data_).subspan(r * cols_, cols_); }

  Matrix transpose() const;
  Matrix kron(const Matrix& other) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double determinant3(const Matrix& r);

}  // namespace cgt
