#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace synesthesia {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// y = M x
inline std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  std::vector<double> y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.data.data() + r * m.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
  return y;
}

/// x = M^T y
inline std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> y) {
  std::vector<double> x(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.data.data() + r * m.cols;
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols; ++c) x[c] += w[c] * yr;
  }
  return x;
}

}  // namespace synesthesia
