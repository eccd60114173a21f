#pragma once

#include <cmath>
#include <vector>

#include "mcnet/rng.hpp"
#include "mcnet/tensor.hpp"

namespace mcnet::testutil {

template <typename T>
TensorPtr<T> tensor_of(Shape s, const std::vector<T>& values,
                       bool requires_grad = false) {
  auto t = make_tensor<T>(s, requires_grad);
  t->v = values;
  return t;
}

template <typename T>
TensorPtr<T> random_tensor(Shape s, Rng& rng, bool requires_grad = false,
                           double lo = -1.0, double hi = 1.0) {
  auto t = make_tensor<T>(s, requires_grad);
  for (auto& x : t->v) x = T(rng.uniform(lo, hi));
  return t;
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  }
  return m;
}

}  // namespace mcnet::testutil
