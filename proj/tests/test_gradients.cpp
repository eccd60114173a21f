#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "mcnet/grad_check.hpp"
#include "mcnet/ops.hpp"
#include "test_util.hpp"

using namespace mcnet;
using namespace mcnet::testutil;

namespace {

// Runs grad_check for a graph rebuilt from the given leaves on every call.
GradCheckReport check_graph(
    const std::vector<std::pair<std::string, TensorPtr<double>>>& leaves,
    const std::function<TensorPtr<double>(Tape<double>*)>& build,
    int n_samples, double tol = 1e-4, uint64_t seed = 99) {
  auto loss_fn = [&]() { return double(build(nullptr)->v[0]); };
  auto grad_fn = [&]() {
    for (auto& [name, t] : leaves) {
      t->ensure_grad();
      t->zero_grad();
    }
    Tape<double> tape;
    auto loss = build(&tape);
    tape.backward(loss);
  };
  return grad_check<double>(leaves, loss_fn, grad_fn, n_samples, 1e-5, tol,
                            seed);
}

}  // namespace

TEST_CASE("linear model y = w*x agrees with finite differences exactly") {
  auto w = tensor_of<double>({1, 1, 1, 1}, {1.7}, true);
  auto x = tensor_of<double>({1, 1, 1, 1}, {2.3});
  auto b = tensor_of<double>({1, 1, 1, 1}, {0.0});
  auto report = check_graph(
      {{"w", w}},
      [&](Tape<double>* tape) { return sum_all(tape, conv2d(tape, x, w, b)); },
      1, 1e-9);
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-9);
}

TEST_CASE("relu gradient is 1 at x=3 and 0 at x=-3") {
  auto x = tensor_of<double>({1, 1, 1, 2}, {3.0, -3.0}, true);
  auto report = check_graph(
      {{"x", x}},
      [&](Tape<double>* tape) { return sum_all(tape, relu(tape, x)); }, 2,
      1e-6);
  CHECK(report.pass);

  // Direct values.
  Tape<double> tape;
  x->ensure_grad();
  x->zero_grad();
  auto loss = sum_all(&tape, relu(&tape, x));
  tape.backward(loss);
  CHECK(x->g[0] == 1.0);
  CHECK(x->g[1] == 0.0);
}

TEST_CASE("conv2d gradients (input, weights, bias) vs finite differences") {
  Rng rng(21);
  auto x = random_tensor<double>({2, 3, 6, 6}, rng, true);
  auto w = random_tensor<double>({4, 3, 4, 4}, rng, true);
  auto b = random_tensor<double>({1, 4, 1, 1}, rng, true);
  // Sigmoid keeps the loss nonlinear in the conv output.
  auto build = [&](Tape<double>* tape) {
    auto y = conv2d(tape, x, w, b);
    auto s = sigmoid(tape, y);
    return sum_all(tape, s);
  };
  auto report = check_graph({{"x", x}, {"w", w}, {"b", b}}, build, 60);
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("batch_norm gradient vs finite differences") {
  Rng rng(22);
  auto x = random_tensor<double>({2, 3, 4, 4}, rng, true, -2.0, 2.0);
  auto build = [&](Tape<double>* tape) {
    auto y = batch_norm_train(tape, x, 1e-5);
    auto s = sigmoid(tape, y);
    return sum_all(tape, s);
  };
  auto report = check_graph({{"x", x}}, build, 40);
  CHECK(report.pass);
}

TEST_CASE("max_pool2d gradient vs finite differences away from ties") {
  Rng rng(23);
  auto x = random_tensor<double>({1, 2, 4, 4}, rng, true);
  auto build = [&](Tape<double>* tape) {
    auto y = max_pool2d(tape, x, 2);
    auto s = sigmoid(tape, y);
    return sum_all(tape, s);
  };
  auto report = check_graph({{"x", x}}, build, 32);
  CHECK(report.pass);
}

TEST_CASE("max_pool2d ties route gradient to the first row-major position") {
  auto x = tensor_of<double>({1, 1, 2, 2}, {0.5, 0.5, 0.5, 0.5}, true);
  Tape<double> tape;
  x->ensure_grad();
  auto loss = sum_all(&tape, max_pool2d(&tape, x, 2));
  tape.backward(loss);
  CHECK(x->g == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("upsample_bilinear gradient vs finite differences") {
  Rng rng(24);
  auto x = random_tensor<double>({1, 2, 3, 3}, rng, true);
  auto build = [&](Tape<double>* tape) {
    auto y = upsample_bilinear(tape, x, 2);
    auto s = sigmoid(tape, y);
    return sum_all(tape, s);
  };
  auto report = check_graph({{"x", x}}, build, 18);
  CHECK(report.pass);
}

TEST_CASE("concat + add fan-out gradient vs finite differences") {
  Rng rng(25);
  auto a = random_tensor<double>({1, 2, 3, 3}, rng, true);
  auto b = random_tensor<double>({1, 2, 3, 3}, rng, true);
  auto build = [&](Tape<double>* tape) {
    auto s = add(tape, a, b);
    auto c = concat_channels(tape, {s, a, b});
    auto t = sigmoid(tape, c);
    return sum_all(tape, t);
  };
  auto report = check_graph({{"a", a}, {"b", b}}, build, 36);
  CHECK(report.pass);
}

TEST_CASE("sigmoid and softmax gradients vs finite differences") {
  Rng rng(26);
  auto x = random_tensor<double>({1, 4, 3, 3}, rng, true, -2.0, 2.0);
  auto sig_report = check_graph(
      {{"x", x}},
      [&](Tape<double>* tape) {
        auto y = sigmoid(tape, x);
        return sum_all(tape, add(tape, y, y));
      },
      30);
  CHECK(sig_report.pass);

  auto truth = make_tensor<double>({1, 4, 3, 3});
  for (int p = 0; p < 9; ++p) truth->v[size_t((p % 4) * 9 + p)] = 1.0;
  auto soft_report = check_graph(
      {{"x", x}},
      [&](Tape<double>* tape) {
        auto y = softmax_channels(tape, x);
        return cce_loss(tape, y, truth);
      },
      36);
  CHECK(soft_report.pass);
}

TEST_CASE("bce gradient matches finite differences on a random 2x2") {
  Rng rng(27);
  auto pred = random_tensor<double>({1, 1, 2, 2}, rng, true, 0.05, 0.95);
  auto truth = tensor_of<double>({1, 1, 2, 2}, {1, 0, 0, 1});
  auto report = check_graph(
      {{"pred", pred}},
      [&](Tape<double>* tape) { return bce_loss(tape, pred, truth); }, 4,
      1e-4);
  CHECK(report.pass);
}

TEST_CASE("conv -> relu -> pool -> loss chain passes at tol 1e-4") {
  Rng rng(28);
  auto x = random_tensor<double>({2, 2, 8, 8}, rng);
  auto w = random_tensor<double>({4, 2, 3, 3}, rng, true);
  auto b = random_tensor<double>({1, 4, 1, 1}, rng, true);
  auto truth = make_tensor<double>({2, 4, 4, 4});
  Rng trng(29);
  for (auto& t : truth->v) t = trng.uniform() < 0.5 ? 0.0 : 1.0;
  auto build = [&](Tape<double>* tape) {
    auto c = conv2d(tape, x, w, b);
    auto r = relu(tape, c);
    auto p = max_pool2d(tape, r, 2);
    auto s = sigmoid(tape, p);
    return bce_loss(tape, s, truth);
  };
  auto report = check_graph({{"w", w}, {"b", b}}, build, 60);
  CHECK(report.pass);
  CHECK(report.n_checked == 60);
}

TEST_CASE("deliberately corrupted backward is reported as a failure") {
  Rng rng(30);
  auto x = random_tensor<double>({1, 1, 2, 2}, rng, true);
  auto loss_fn = [&]() {
    auto y = sigmoid<double>(nullptr, x);
    return double(sum_all<double>(nullptr, y)->v[0]);
  };
  auto grad_fn = [&]() {
    x->ensure_grad();
    x->zero_grad();
    Tape<double> tape;
    auto loss = sum_all(&tape, sigmoid(&tape, x));
    tape.backward(loss);
    for (auto& g : x->g) g *= 1.5;  // corrupt the backward result
  };
  auto report =
      grad_check<double>({{"x", x}}, loss_fn, grad_fn, 4, 1e-5, 1e-4, 31);
  CHECK_FALSE(report.pass);
  CHECK(report.failures.size() == 4);
}
