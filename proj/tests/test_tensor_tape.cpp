#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcnet/ops.hpp"
#include "mcnet/tape.hpp"
#include "mcnet/tensor.hpp"
#include "test_util.hpp"

using namespace mcnet;
using namespace mcnet::testutil;

TEST_CASE("tensor allocation and invariants") {
  auto t = make_tensor<double>({2, 3, 4, 5});
  CHECK(t->shape.numel() == 120);
  CHECK(t->v.size() == 120);
  CHECK_FALSE(t->has_grad());
  t->ensure_grad();
  CHECK(t->g.size() == t->v.size());
  t->g[7] = 3.0;
  t->zero_grad();
  CHECK(t->g[7] == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape<double> tape;
  auto x = make_tensor<double>({1, 1, 2, 2}, true);
  CHECK_THROWS_AS(tape.backward(x), Error);
}

TEST_CASE("loss = sum(x) gives all-ones gradient") {
  Tape<double> tape;
  Rng rng(11);
  auto x = random_tensor<double>({2, 3, 4, 4}, rng, true);
  auto loss = sum_all(&tape, x);
  tape.backward(loss);
  for (double g : x->g) CHECK(g == 1.0);
}

TEST_CASE("fan-out accumulates: y = x + x gives all-twos gradient") {
  Tape<double> tape;
  Rng rng(12);
  auto x = random_tensor<double>({1, 2, 3, 3}, rng, true);
  auto y = add(&tape, x, x);
  auto loss = sum_all(&tape, y);
  tape.backward(loss);
  for (double g : x->g) CHECK(g == 2.0);
}

TEST_CASE("diamond graph sums gradients over both paths") {
  // loss = sum(relu(x) + x); for x > 0 the total derivative is 2, for x < 0
  // it is 1.
  Tape<double> tape;
  auto x = tensor_of<double>({1, 1, 2, 2}, {1.0, -2.0, 3.0, -4.0}, true);
  auto a = relu(&tape, x);
  auto y = add(&tape, a, x);
  auto loss = sum_all(&tape, y);
  tape.backward(loss);
  CHECK(x->g[0] == 2.0);
  CHECK(x->g[1] == 1.0);
  CHECK(x->g[2] == 2.0);
  CHECK(x->g[3] == 1.0);
}

TEST_CASE("tape replays each op exactly once") {
  Tape<double> tape;
  auto x = make_tensor<double>({1, 1, 1, 1}, true);
  x->v[0] = 5.0;
  auto y = add(&tape, x, x);
  auto z = add(&tape, y, y);
  auto loss = sum_all(&tape, z);
  CHECK(tape.size() == 3);
  tape.backward(loss);
  CHECK(x->g[0] == 4.0);
}

TEST_CASE("eval mode (null tape) records nothing and allocates no grads") {
  Rng rng(13);
  auto x = random_tensor<double>({1, 2, 4, 4}, rng, true);
  auto y = relu<double>(nullptr, x);
  CHECK_FALSE(x->has_grad());
  CHECK_FALSE(y->has_grad());
}
