#pragma once

#include <cstdint>
#include <vector>

#include "mcnet/shape.hpp"

namespace mcnet::kern {

// SAME padding at stride 1: before = floor((k-1)/2), after = ceil((k-1)/2),
// so even kernels pad one extra row/column on the bottom/right.
struct Pad2d {
  int top = 0;
  int left = 0;
};

inline Pad2d same_pad(int kh, int kw) { return {(kh - 1) / 2, (kw - 1) / 2}; }

// All kernels are data-parallel over independent output slices and leave the
// per-element accumulation order fixed, so results are bit-identical for a
// given input regardless of thread count. Gradient kernels accumulate (+=)
// into their destination.

template <typename T>
void conv2d_forward(const T* x, Shape xs, const T* w, int oc, int kh, int kw,
                    const T* bias, T* y);

template <typename T>
void conv2d_backward_input(const T* gy, Shape ys, const T* w, int ic, int kh,
                           int kw, T* gx);

template <typename T>
void conv2d_backward_weights(const T* x, Shape xs, const T* gy, int oc, int kh,
                             int kw, T* gw);

template <typename T>
void conv2d_backward_bias(const T* gy, Shape ys, T* gb);

template <typename T>
void maxpool_forward(const T* x, Shape xs, int pool, T* y, int64_t* argmax);

template <typename T>
void maxpool_backward(const T* gy, Shape ys, const int64_t* argmax, T* gx);

template <typename T>
void upsample_bilinear_forward(const T* x, Shape xs, int factor, T* y);

template <typename T>
void upsample_bilinear_backward(const T* gy, Shape ys, int factor, T* gx);

// Per-channel mean and population variance over the (N,H,W) axes.
template <typename T>
void bn_channel_stats(const T* x, Shape xs, T* mean, T* var);

template <typename T>
void bn_normalize(const T* x, Shape xs, const T* mean, const T* inv_std, T* y);

// Backward through the affine-free normalization; y holds the normalized
// forward output.
template <typename T>
void bn_backward(const T* gy, const T* y, Shape xs, const T* inv_std, T* gx);

}  // namespace mcnet::kern

namespace mcnet::ref {

// Serial reference implementations kept alongside the parallel kernels; the
// tests use them as independent oracles and the bench tool compares timings.

// Sliding-window convolution over an explicitly zero-padded copy of the
// input.
template <typename T>
void conv2d_forward(const T* x, Shape xs, const T* w, int oc, int kh, int kw,
                    const T* bias, T* y);

template <typename T>
void conv2d_backward_input(const T* gy, Shape ys, const T* w, int ic, int kh,
                           int kw, T* gx);

template <typename T>
void conv2d_backward_weights(const T* x, Shape xs, const T* gy, int oc, int kh,
                             int kw, T* gw);

template <typename T>
void maxpool_forward(const T* x, Shape xs, int pool, T* y);

template <typename T>
void upsample_bilinear_forward(const T* x, Shape xs, int factor, T* y);

template <typename T>
void bn_channel_stats(const T* x, Shape xs, T* mean, T* var);

}  // namespace mcnet::ref
