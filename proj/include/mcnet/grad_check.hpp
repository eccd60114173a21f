#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mcnet/tensor.hpp"

namespace mcnet {

struct GradCheckFailure {
  std::string leaf;
  int64_t index = 0;
  double analytic = 0;
  double numeric = 0;
  double rel_err = 0;
};

struct GradCheckReport {
  int n_checked = 0;
  double max_rel_err = 0;
  bool pass = false;
  std::vector<GradCheckFailure> failures;
};

// Central-difference check of reverse-mode gradients against (f(w+h) -
// f(w-h)) / 2h on n_samples randomly chosen scalar entries of the given leaf
// tensors. grad_fn must zero grads and run forward+backward; loss_fn must run
// the same forward (reading the current leaf values) and return the loss.
// Entries where both gradients fall below zero_floor count as agreeing; the
// relative error everywhere else is |a-n| / max(|a|, |n|).
template <typename T>
GradCheckReport grad_check(
    const std::vector<std::pair<std::string, TensorPtr<T>>>& leaves,
    const std::function<double()>& loss_fn,
    const std::function<void()>& grad_fn, int n_samples, double h, double tol,
    uint64_t seed, double zero_floor = 1e-7);

}  // namespace mcnet
