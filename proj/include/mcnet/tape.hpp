#pragma once

#include <functional>
#include <vector>

#include "mcnet/tensor.hpp"

namespace mcnet {

// Reverse-mode tape. Operations are appended in forward (topological) order;
// each entry owns a closure that scatters the output gradient back onto the
// operation's inputs, accumulating where a tensor fans out to several
// consumers. A tape instance is single-threaded.
template <typename T>
class Tape {
 public:
  void record(std::function<void()> backward_fn) {
    ops_.push_back(std::move(backward_fn));
  }

  size_t size() const { return ops_.size(); }

  void clear() { ops_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse, visiting each
  // recorded operation exactly once.
  void backward(const TensorPtr<T>& loss) {
    if (!loss || loss->shape.numel() != 1) {
      fail(ErrorClass::shape,
           "backward requires a scalar loss, got " +
               (loss ? loss->shape.str() : std::string("null")));
    }
    loss->ensure_grad();
    loss->g[0] += T(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

 private:
  std::vector<std::function<void()>> ops_;
};

}  // namespace mcnet
