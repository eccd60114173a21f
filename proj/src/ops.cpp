#include "mcnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mcnet/kernels.hpp"

namespace mcnet {

namespace {

template <typename T>
bool wants_grad(Tape<T>* tape, const TensorPtr<T>& out) {
  return tape != nullptr && out->requires_grad;
}

}  // namespace

template <typename T>
TensorPtr<T> conv2d(Tape<T>* tape, const TensorPtr<T>& x,
                    const TensorPtr<T>& weights, const TensorPtr<T>& bias) {
  const Shape& xs = x->shape;
  const Shape& ws = weights->shape;  // (out_c, in_c, kh, kw)
  const int oc = ws.n, ic = ws.c, kh = ws.h, kw = ws.w;
  if (xs.c != ic) {
    fail(ErrorClass::shape, "conv2d: input " + xs.str() +
                                " does not match weights " + ws.str() +
                                " (channels " + std::to_string(xs.c) +
                                " vs in-channels " + std::to_string(ic) + ")");
  }
  if (bias->shape.numel() != oc) {
    fail(ErrorClass::shape, "conv2d: bias " + bias->shape.str() +
                                " does not match out-channels " +
                                std::to_string(oc));
  }
  if (!x->all_finite()) {
    fail(ErrorClass::numeric, "conv2d: non-finite input values");
  }

  auto y = make_tensor<T>({xs.n, oc, xs.h, xs.w});
  kern::conv2d_forward(x->v.data(), xs, weights->v.data(), oc, kh, kw,
                       bias->v.data(), y->v.data());
  y->requires_grad =
      x->requires_grad || weights->requires_grad || bias->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    if (x->requires_grad) x->ensure_grad();
    if (weights->requires_grad) weights->ensure_grad();
    if (bias->requires_grad) bias->ensure_grad();
    tape->record([x, weights, bias, y, oc, ic, kh, kw]() {
      if (x->requires_grad) {
        kern::conv2d_backward_input(y->g.data(), y->shape, weights->v.data(),
                                    ic, kh, kw, x->g.data());
      }
      if (weights->requires_grad) {
        kern::conv2d_backward_weights(x->v.data(), x->shape, y->g.data(), oc,
                                      kh, kw, weights->g.data());
      }
      if (bias->requires_grad) {
        kern::conv2d_backward_bias(y->g.data(), y->shape, bias->g.data());
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> relu(Tape<T>* tape, const TensorPtr<T>& x) {
  auto y = make_tensor<T>(x->shape);
  const int64_t n = x->shape.numel();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    y->v[i] = x->v[i] > T(0) ? x->v[i] : T(0);
  }
  y->requires_grad = x->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    x->ensure_grad();
    tape->record([x, y, n]() {
      // Subgradient 0 at exactly zero.
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        if (x->v[i] > T(0)) x->g[i] += y->g[i];
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> batch_norm_train(Tape<T>* tape, const TensorPtr<T>& x, T eps,
                              std::vector<T>* batch_mean,
                              std::vector<T>* batch_var) {
  const Shape& xs = x->shape;
  if (int64_t(xs.n) * xs.plane() < 2) {
    fail(ErrorClass::shape,
         "batch_norm: needs at least 2 elements per channel, got " +
             xs.str());
  }
  std::vector<T> mean(size_t(xs.c)), var(size_t(xs.c));
  kern::bn_channel_stats(x->v.data(), xs, mean.data(), var.data());
  auto inv_std = std::make_shared<std::vector<T>>(size_t(xs.c));
  for (int c = 0; c < xs.c; ++c) {
    (*inv_std)[size_t(c)] = T(1) / std::sqrt(var[size_t(c)] + eps);
  }
  auto y = make_tensor<T>(xs);
  kern::bn_normalize(x->v.data(), xs, mean.data(), inv_std->data(),
                     y->v.data());
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;

  y->requires_grad = x->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    x->ensure_grad();
    tape->record([x, y, inv_std]() {
      kern::bn_backward(y->g.data(), y->v.data(), x->shape, inv_std->data(),
                        x->g.data());
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> batch_norm_eval(const TensorPtr<T>& x, T eps,
                             const std::vector<T>& mean,
                             const std::vector<T>& var) {
  const Shape& xs = x->shape;
  if (int(mean.size()) != xs.c || int(var.size()) != xs.c) {
    fail(ErrorClass::shape, "batch_norm_eval: running stats size " +
                                std::to_string(mean.size()) +
                                " does not match channels " +
                                std::to_string(xs.c));
  }
  std::vector<T> inv_std(size_t(xs.c));
  for (int c = 0; c < xs.c; ++c) {
    inv_std[size_t(c)] = T(1) / std::sqrt(var[size_t(c)] + eps);
  }
  auto y = make_tensor<T>(xs);
  kern::bn_normalize(x->v.data(), xs, mean.data(), inv_std.data(),
                     y->v.data());
  return y;
}

template <typename T>
TensorPtr<T> channel_affine(Tape<T>* tape, const TensorPtr<T>& x,
                            const TensorPtr<T>& gamma,
                            const TensorPtr<T>& beta) {
  const Shape& xs = x->shape;
  if (gamma->shape.numel() != xs.c || beta->shape.numel() != xs.c) {
    fail(ErrorClass::shape, "channel_affine: gamma/beta size does not match " +
                                std::to_string(xs.c) + " channels");
  }
  auto y = make_tensor<T>(xs);
  const int64_t plane = xs.plane();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      const int64_t off = (int64_t(n) * xs.c + c) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        y->v[off + p] = x->v[off + p] * gamma->v[c] + beta->v[c];
      }
    }
  }
  y->requires_grad =
      x->requires_grad || gamma->requires_grad || beta->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    if (x->requires_grad) x->ensure_grad();
    if (gamma->requires_grad) gamma->ensure_grad();
    if (beta->requires_grad) beta->ensure_grad();
    tape->record([x, gamma, beta, y, plane]() {
      const Shape& s = x->shape;
      if (x->requires_grad) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            const int64_t off = (int64_t(n) * s.c + c) * plane;
            for (int64_t p = 0; p < plane; ++p) {
              x->g[off + p] += y->g[off + p] * gamma->v[c];
            }
          }
        }
      }
#pragma omp parallel for schedule(static)
      for (int c = 0; c < s.c; ++c) {
        T gg = T(0), gb = T(0);
        for (int n = 0; n < s.n; ++n) {
          const int64_t off = (int64_t(n) * s.c + c) * plane;
          for (int64_t p = 0; p < plane; ++p) {
            gg += y->g[off + p] * x->v[off + p];
            gb += y->g[off + p];
          }
        }
        if (gamma->requires_grad) gamma->g[c] += gg;
        if (beta->requires_grad) beta->g[c] += gb;
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> concat_channels(Tape<T>* tape,
                             const std::vector<TensorPtr<T>>& xs) {
  if (xs.empty()) {
    fail(ErrorClass::shape, "concat_channels: no inputs");
  }
  const Shape& first = xs.front()->shape;
  int total_c = 0;
  for (const auto& x : xs) {
    if (x->shape.n != first.n || x->shape.h != first.h ||
        x->shape.w != first.w) {
      fail(ErrorClass::shape, "concat_channels: spatial mismatch " +
                                  first.str() + " vs " + x->shape.str());
    }
    total_c += x->shape.c;
  }
  auto y = make_tensor<T>({first.n, total_c, first.h, first.w});
  const int64_t plane = first.plane();
  bool rg = false;
  {
    int base_c = 0;
    for (const auto& x : xs) {
      const int xc = x->shape.c;
#pragma omp parallel for collapse(2) schedule(static)
      for (int n = 0; n < first.n; ++n) {
        for (int c = 0; c < xc; ++c) {
          const T* src = x->v.data() + (int64_t(n) * xc + c) * plane;
          T* dst =
              y->v.data() + (int64_t(n) * total_c + base_c + c) * plane;
          std::copy(src, src + plane, dst);
        }
      }
      base_c += xc;
      rg = rg || x->requires_grad;
    }
  }
  y->requires_grad = rg;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    for (const auto& x : xs) {
      if (x->requires_grad) x->ensure_grad();
    }
    tape->record([xs, y, total_c, plane]() {
      int base_c = 0;
      for (const auto& x : xs) {
        const int xc = x->shape.c;
        if (x->requires_grad) {
#pragma omp parallel for collapse(2) schedule(static)
          for (int n = 0; n < x->shape.n; ++n) {
            for (int c = 0; c < xc; ++c) {
              const T* src =
                  y->g.data() + (int64_t(n) * total_c + base_c + c) * plane;
              T* dst = x->g.data() + (int64_t(n) * xc + c) * plane;
              for (int64_t p = 0; p < plane; ++p) dst[p] += src[p];
            }
          }
        }
        base_c += xc;
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> max_pool2d(Tape<T>* tape, const TensorPtr<T>& x, int pool) {
  const Shape& xs = x->shape;
  if (pool < 1) {
    fail(ErrorClass::shape, "max_pool2d: pool size must be >= 1");
  }
  if (xs.h % pool != 0 || xs.w % pool != 0) {
    fail(ErrorClass::shape, "max_pool2d: spatial dims " + xs.str() +
                                " not divisible by pool " +
                                std::to_string(pool));
  }
  auto y = make_tensor<T>({xs.n, xs.c, xs.h / pool, xs.w / pool});
  auto argmax =
      std::make_shared<std::vector<int64_t>>(size_t(y->shape.numel()));
  kern::maxpool_forward(x->v.data(), xs, pool, y->v.data(), argmax->data());
  y->requires_grad = x->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    x->ensure_grad();
    tape->record([x, y, argmax]() {
      kern::maxpool_backward(y->g.data(), y->shape, argmax->data(),
                             x->g.data());
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> upsample_bilinear(Tape<T>* tape, const TensorPtr<T>& x,
                               int factor) {
  if (factor < 1) {
    fail(ErrorClass::shape, "upsample_bilinear: factor must be >= 1");
  }
  const Shape& xs = x->shape;
  auto y = make_tensor<T>({xs.n, xs.c, xs.h * factor, xs.w * factor});
  kern::upsample_bilinear_forward(x->v.data(), xs, factor, y->v.data());
  y->requires_grad = x->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    x->ensure_grad();
    tape->record([x, y, factor]() {
      kern::upsample_bilinear_backward(y->g.data(), y->shape, factor,
                                       x->g.data());
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> add(Tape<T>* tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  if (!(a->shape == b->shape)) {
    fail(ErrorClass::shape,
         "add: shape mismatch " + a->shape.str() + " vs " + b->shape.str());
  }
  auto y = make_tensor<T>(a->shape);
  const int64_t n = a->shape.numel();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y->v[i] = a->v[i] + b->v[i];
  y->requires_grad = a->requires_grad || b->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    tape->record([a, b, y, n]() {
      if (a->requires_grad) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) a->g[i] += y->g[i];
      }
      if (b->requires_grad) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) b->g[i] += y->g[i];
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> sigmoid(Tape<T>* tape, const TensorPtr<T>& x) {
  auto y = make_tensor<T>(x->shape);
  const int64_t n = x->shape.numel();
  // Clamp to the open interval; at float precision the plain formula
  // saturates to exactly 0 or 1 for |x| beyond ~17.
  const T lo = std::numeric_limits<T>::min();
  const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const T xv = x->v[i];
    T s;
    if (xv >= T(0)) {
      s = T(1) / (T(1) + std::exp(-xv));
    } else {
      const T e = std::exp(xv);
      s = e / (T(1) + e);
    }
    y->v[i] = std::clamp(s, lo, hi);
  }
  y->requires_grad = x->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    x->ensure_grad();
    tape->record([x, y, n]() {
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        x->g[i] += y->g[i] * y->v[i] * (T(1) - y->v[i]);
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> softmax_channels(Tape<T>* tape, const TensorPtr<T>& x) {
  const Shape& xs = x->shape;
  auto y = make_tensor<T>(xs);
  const int64_t plane = xs.plane();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n) {
    for (int64_t p = 0; p < plane; ++p) {
      const int64_t base = int64_t(n) * xs.c * plane + p;
      T m = x->v[base];
      for (int c = 1; c < xs.c; ++c) {
        m = std::max(m, x->v[base + int64_t(c) * plane]);
      }
      T sum = T(0);
      for (int c = 0; c < xs.c; ++c) {
        const T e = std::exp(x->v[base + int64_t(c) * plane] - m);
        y->v[base + int64_t(c) * plane] = e;
        sum += e;
      }
      for (int c = 0; c < xs.c; ++c) {
        y->v[base + int64_t(c) * plane] /= sum;
      }
    }
  }
  y->requires_grad = x->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    x->ensure_grad();
    tape->record([x, y, plane]() {
      const Shape& s = x->shape;
#pragma omp parallel for collapse(2) schedule(static)
      for (int n = 0; n < s.n; ++n) {
        for (int64_t p = 0; p < plane; ++p) {
          const int64_t base = int64_t(n) * s.c * plane + p;
          T dot = T(0);
          for (int c = 0; c < s.c; ++c) {
            const int64_t i = base + int64_t(c) * plane;
            dot += y->g[i] * y->v[i];
          }
          for (int c = 0; c < s.c; ++c) {
            const int64_t i = base + int64_t(c) * plane;
            x->g[i] += y->v[i] * (y->g[i] - dot);
          }
        }
      }
    });
  }
  return y;
}

namespace {

template <typename T>
void check_loss_shapes(const TensorPtr<T>& pred, const TensorPtr<T>& truth,
                       const char* name) {
  if (!(pred->shape == truth->shape)) {
    fail(ErrorClass::shape, std::string(name) + ": prediction " +
                                pred->shape.str() + " vs truth " +
                                truth->shape.str());
  }
}

}  // namespace

template <typename T>
TensorPtr<T> bce_loss(Tape<T>* tape, const TensorPtr<T>& pred,
                      const TensorPtr<T>& truth) {
  check_loss_shapes(pred, truth, "bce_loss");
  const int64_t n = pred->shape.numel();
  const T lo = T(kLossClamp), hi = T(1) - T(kLossClamp);
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const T p = std::clamp(pred->v[i], lo, hi);
    const T t = truth->v[i];
    acc -= double(t) * std::log(double(p)) +
           (1.0 - double(t)) * std::log(1.0 - double(p));
  }
  auto y = make_tensor<T>({1, 1, 1, 1});
  y->v[0] = T(acc / double(n));
  y->requires_grad = pred->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    pred->ensure_grad();
    tape->record([pred, truth, y, n, lo, hi]() {
      const T go = y->g[0];
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        const T p = pred->v[i];
        if (p <= lo || p >= hi) continue;  // clamped region, flat loss
        const T t = truth->v[i];
        pred->g[i] += go * (p - t) / (p * (T(1) - p)) / T(n);
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> cce_loss(Tape<T>* tape, const TensorPtr<T>& pred,
                      const TensorPtr<T>& truth) {
  check_loss_shapes(pred, truth, "cce_loss");
  const Shape& s = pred->shape;
  const int64_t pixels = int64_t(s.n) * s.plane();
  const int64_t n = s.numel();
  const T lo = T(kLossClamp), hi = T(1) - T(kLossClamp);
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const T t = truth->v[i];
    if (t == T(0)) continue;
    const T p = std::clamp(pred->v[i], lo, hi);
    acc -= double(t) * std::log(double(p));
  }
  auto y = make_tensor<T>({1, 1, 1, 1});
  y->v[0] = T(acc / double(pixels));
  y->requires_grad = pred->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    pred->ensure_grad();
    tape->record([pred, truth, y, n, pixels, lo, hi]() {
      const T go = y->g[0];
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        const T t = truth->v[i];
        if (t == T(0)) continue;
        const T p = pred->v[i];
        if (p <= lo || p >= hi) continue;
        pred->g[i] -= go * t / p / T(pixels);
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> sum_all(Tape<T>* tape, const TensorPtr<T>& x) {
  const int64_t n = x->shape.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += double(x->v[i]);
  auto y = make_tensor<T>({1, 1, 1, 1});
  y->v[0] = T(acc);
  y->requires_grad = x->requires_grad;
  if (wants_grad(tape, y)) {
    y->ensure_grad();
    x->ensure_grad();
    tape->record([x, y, n]() {
      const T go = y->g[0];
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) x->g[i] += go;
    });
  }
  return y;
}

#define MCNET_INSTANTIATE_OPS(T)                                              \
  template TensorPtr<T> conv2d<T>(Tape<T>*, const TensorPtr<T>&,             \
                                  const TensorPtr<T>&, const TensorPtr<T>&); \
  template TensorPtr<T> relu<T>(Tape<T>*, const TensorPtr<T>&);              \
  template TensorPtr<T> batch_norm_train<T>(Tape<T>*, const TensorPtr<T>&,   \
                                            T, std::vector<T>*,              \
                                            std::vector<T>*);                \
  template TensorPtr<T> batch_norm_eval<T>(const TensorPtr<T>&, T,           \
                                           const std::vector<T>&,            \
                                           const std::vector<T>&);           \
  template TensorPtr<T> channel_affine<T>(Tape<T>*, const TensorPtr<T>&,     \
                                          const TensorPtr<T>&,               \
                                          const TensorPtr<T>&);              \
  template TensorPtr<T> concat_channels<T>(Tape<T>*,                         \
                                           const std::vector<TensorPtr<T>>&);\
  template TensorPtr<T> max_pool2d<T>(Tape<T>*, const TensorPtr<T>&, int);   \
  template TensorPtr<T> upsample_bilinear<T>(Tape<T>*, const TensorPtr<T>&,  \
                                             int);                           \
  template TensorPtr<T> add<T>(Tape<T>*, const TensorPtr<T>&,                \
                               const TensorPtr<T>&);                         \
  template TensorPtr<T> sigmoid<T>(Tape<T>*, const TensorPtr<T>&);           \
  template TensorPtr<T> softmax_channels<T>(Tape<T>*, const TensorPtr<T>&);  \
  template TensorPtr<T> bce_loss<T>(Tape<T>*, const TensorPtr<T>&,           \
                                    const TensorPtr<T>&);                    \
  template TensorPtr<T> cce_loss<T>(Tape<T>*, const TensorPtr<T>&,           \
                                    const TensorPtr<T>&);                    \
  template TensorPtr<T> sum_all<T>(Tape<T>*, const TensorPtr<T>&);

MCNET_INSTANTIATE_OPS(float)
MCNET_INSTANTIATE_OPS(double)

#undef MCNET_INSTANTIATE_OPS

}  // namespace mcnet
