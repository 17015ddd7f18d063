#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cctx {

// Dense row-major 2-D array of doubles. Training math runs in doubles;
// float32 appears only inside serialized inference models.
struct Tensor2 {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Tensor2(std::size_t r, std::size_t c, std::vector<double> d)
      : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) {
      throw std::invalid_argument("Tensor2: data length " + std::to_string(data.size()) +
                                  " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  static Tensor2 zeros(std::size_t r, std::size_t c) { return Tensor2(r, c); }
  static Tensor2 identity(std::size_t n) {
    Tensor2 t(n, n);
    for (std::size_t i = 0; i < n; ++i) t.data[i * n + i] = 1.0;
    return t;
  }
  static Tensor2 row(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor2(1, n, std::move(v));
  }

  std::size_t numel() const { return rows * cols; }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }

  bool all_finite() const;
};

bool all_finite(const std::vector<double>& v);

}  // namespace cctx
