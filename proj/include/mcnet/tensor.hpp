#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "mcnet/error.hpp"
#include "mcnet/shape.hpp"

namespace mcnet {

// Dense 4-D tensor node. Values are row-major (N,C,H,W); the gradient array
// is allocated only while the tensor participates in a recorded graph.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> v;
  std::vector<T> g;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Shape s, bool rg = false)
      : shape(s), v(size_t(s.numel()), T(0)), requires_grad(rg) {}

  T& at(int n, int c, int h, int w) { return v[index4(shape, n, c, h, w)]; }
  T at(int n, int c, int h, int w) const {
    return v[index4(shape, n, c, h, w)];
  }

  bool has_grad() const { return !g.empty(); }

  void ensure_grad() {
    if (g.empty()) g.assign(v.size(), T(0));
  }

  void zero_grad() {
    if (!g.empty()) g.assign(g.size(), T(0));
  }

  bool all_finite() const {
    for (T x : v) {
      if (!std::isfinite(double(x))) return false;
    }
    return true;
  }
};

template <typename T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <typename T>
TensorPtr<T> make_tensor(Shape s, bool requires_grad = false) {
  if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
    fail(ErrorClass::shape, "negative tensor dimension " + s.str());
  }
  return std::make_shared<Tensor<T>>(s, requires_grad);
}

}  // namespace mcnet
