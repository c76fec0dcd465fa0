#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "rfap/common.hpp"

namespace rfap::nn {

/// Dense row-major value container, up to 5 dimensions. All computation is
/// done in 64-bit precision so analytic gradients can be checked against
/// central finite differences.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(element_count(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape))
      throw ShapeError("tensor data length does not match shape");
  }

  static std::size_t element_count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw ShapeError("negative tensor dimension");
      n *= static_cast<std::size_t>(d);
    }
    return s.empty() ? 0 : n;
  }

  std::size_t size() const { return data.size(); }
  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  bool all_finite() const;
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

std::string shape_str(const std::vector<int>& shape);

}  // namespace rfap::nn
