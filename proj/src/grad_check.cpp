#include "mcnet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mcnet/error.hpp"
#include "mcnet/rng.hpp"

namespace mcnet {

template <typename T>
GradCheckReport grad_check(
    const std::vector<std::pair<std::string, TensorPtr<T>>>& leaves,
    const std::function<double()>& loss_fn,
    const std::function<void()>& grad_fn, int n_samples, double h, double tol,
    uint64_t seed, double zero_floor) {
  if (leaves.empty()) {
    fail(ErrorClass::config, "grad_check: no leaf tensors given");
  }
  grad_fn();

  int64_t total = 0;
  std::vector<int64_t> offsets;
  for (const auto& [name, t] : leaves) {
    offsets.push_back(total);
    total += t->shape.numel();
  }

  Rng rng(seed);
  std::set<int64_t> chosen;
  const int64_t want = std::min<int64_t>(n_samples, total);
  while (int64_t(chosen.size()) < want) {
    chosen.insert(int64_t(rng.uniform_index(uint64_t(total))));
  }

  GradCheckReport report;
  for (int64_t global : chosen) {
    size_t li = size_t(std::upper_bound(offsets.begin(), offsets.end(),
                                        global) -
                       offsets.begin()) -
                1;
    const auto& [name, t] = leaves[li];
    const int64_t idx = global - offsets[li];

    if (!t->has_grad()) {
      fail(ErrorClass::numeric,
           "grad_check: leaf '" + name + "' has no gradient after backward");
    }
    const double analytic = double(t->g[idx]);

    const T saved = t->v[idx];
    t->v[idx] = T(double(saved) + h);
    const double loss_plus = loss_fn();
    t->v[idx] = T(double(saved) - h);
    const double loss_minus = loss_fn();
    t->v[idx] = saved;
    const double numeric = (loss_plus - loss_minus) / (2.0 * h);

    double rel = 0.0;
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    if (mag >= zero_floor) {
      rel = std::abs(analytic - numeric) / mag;
    }
    report.n_checked += 1;
    report.max_rel_err = std::max(report.max_rel_err, rel);
    if (rel > tol) {
      report.failures.push_back({name, idx, analytic, numeric, rel});
    }
  }
  report.pass = report.failures.empty();
  return report;
}

template GradCheckReport grad_check<float>(
    const std::vector<std::pair<std::string, TensorPtr<float>>>&,
    const std::function<double()>&, const std::function<void()>&, int, double,
    double, uint64_t, double);
template GradCheckReport grad_check<double>(
    const std::vector<std::pair<std::string, TensorPtr<double>>>&,
    const std::function<double()>&, const std::function<void()>&, int, double,
    double, uint64_t, double);

}  // namespace mcnet
