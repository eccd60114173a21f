#pragma once

#include <string>
#include <vector>

#include "mcnet/rng.hpp"
#include "mcnet/tensor.hpp"

namespace mcnet {

// Learnable weights/bias for one layer plus the Adam state that travels with
// them. Moment arrays always mirror the parameter shapes.
template <typename T>
struct LayerParams {
  std::string name;
  TensorPtr<T> weights;  // (out_c, in_c, kh, kw); affine layers use (1,C,1,1)
  TensorPtr<T> bias;     // (1, out_c, 1, 1)
  std::vector<T> m_w, v_w, m_b, v_b;
  int64_t step_count = 0;

  static LayerParams make(std::string name, Shape weight_shape,
                          int bias_size) {
    LayerParams p;
    p.name = std::move(name);
    p.weights = make_tensor<T>(weight_shape, /*requires_grad=*/true);
    p.bias = make_tensor<T>({1, bias_size, 1, 1}, /*requires_grad=*/true);
    p.m_w.assign(p.weights->v.size(), T(0));
    p.v_w.assign(p.weights->v.size(), T(0));
    p.m_b.assign(p.bias->v.size(), T(0));
    p.v_b.assign(p.bias->v.size(), T(0));
    return p;
  }

  int64_t count() const {
    return int64_t(weights->v.size()) + int64_t(bias->v.size());
  }
};

// He (fan-in) normal initialization for conv weights; bias stays zero.
template <typename T>
void he_init(LayerParams<T>& p, Rng& rng) {
  const Shape& ws = p.weights->shape;
  const double fan_in = double(ws.c) * ws.h * ws.w;
  const double stddev = std::sqrt(2.0 / fan_in);
  for (T& w : p.weights->v) w = T(stddev * rng.gaussian());
}

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every given layer. Gradients must have
// been populated by a preceding backward pass.
template <typename T>
void adam_step(const std::vector<LayerParams<T>*>& params,
               const AdamConfig& cfg);

template <typename T>
void zero_grads(const std::vector<LayerParams<T>*>& params);

}  // namespace mcnet
