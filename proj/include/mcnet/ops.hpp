#pragma once

#include <vector>

#include "mcnet/tape.hpp"
#include "mcnet/tensor.hpp"

namespace mcnet {

// Differentiable primitives. Each op validates its contract, computes the
// forward result, and (when a tape is supplied and a gradient is required)
// records a backward closure. Passing tape == nullptr runs forward-only.

// 2-D convolution, stride 1, SAME padding (asymmetric for even kernels).
// weights: (out_c, in_c, kh, kw); bias: (1, out_c, 1, 1).
template <typename T>
TensorPtr<T> conv2d(Tape<T>* tape, const TensorPtr<T>& x,
                    const TensorPtr<T>& weights, const TensorPtr<T>& bias);

template <typename T>
TensorPtr<T> relu(Tape<T>* tape, const TensorPtr<T>& x);

// Affine-free batch normalization over the (N,H,W) axes. Batch statistics
// are written to batch_mean/batch_var when requested so the caller can keep
// running averages for inference.
template <typename T>
TensorPtr<T> batch_norm_train(Tape<T>* tape, const TensorPtr<T>& x, T eps,
                              std::vector<T>* batch_mean = nullptr,
                              std::vector<T>* batch_var = nullptr);

template <typename T>
TensorPtr<T> batch_norm_eval(const TensorPtr<T>& x, T eps,
                             const std::vector<T>& mean,
                             const std::vector<T>& var);

// Per-channel scale and shift; gamma/beta are (1,C,1,1).
template <typename T>
TensorPtr<T> channel_affine(Tape<T>* tape, const TensorPtr<T>& x,
                            const TensorPtr<T>& gamma,
                            const TensorPtr<T>& beta);

template <typename T>
TensorPtr<T> concat_channels(Tape<T>* tape,
                             const std::vector<TensorPtr<T>>& xs);

// Non-overlapping max pooling; H and W must be divisible by pool.
template <typename T>
TensorPtr<T> max_pool2d(Tape<T>* tape, const TensorPtr<T>& x, int pool);

template <typename T>
TensorPtr<T> upsample_bilinear(Tape<T>* tape, const TensorPtr<T>& x,
                               int factor);

template <typename T>
TensorPtr<T> add(Tape<T>* tape, const TensorPtr<T>& a, const TensorPtr<T>& b);

template <typename T>
TensorPtr<T> sigmoid(Tape<T>* tape, const TensorPtr<T>& x);

// Softmax over the channel axis, per pixel, max-stabilized.
template <typename T>
TensorPtr<T> softmax_channels(Tape<T>* tape, const TensorPtr<T>& x);

// Probabilities are clamped to [kLossClamp, 1-kLossClamp] inside both losses;
// the gradient is zero where the clamp is active.
inline constexpr double kLossClamp = 1e-7;

// Mean binary cross-entropy over every element.
template <typename T>
TensorPtr<T> bce_loss(Tape<T>* tape, const TensorPtr<T>& pred,
                      const TensorPtr<T>& truth);

// Mean categorical cross-entropy over pixels; truth is one-hot on channels.
template <typename T>
TensorPtr<T> cce_loss(Tape<T>* tape, const TensorPtr<T>& pred,
                      const TensorPtr<T>& truth);

template <typename T>
TensorPtr<T> sum_all(Tape<T>* tape, const TensorPtr<T>& x);

}  // namespace mcnet
