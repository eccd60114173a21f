#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcnet/params.hpp"
#include "test_util.hpp"

using namespace mcnet;
using namespace mcnet::testutil;

TEST_CASE("adam state mirrors parameter shapes") {
  auto p = LayerParams<double>::make("conv", {8, 3, 3, 3}, 8);
  CHECK(p.m_w.size() == p.weights->v.size());
  CHECK(p.v_w.size() == p.weights->v.size());
  CHECK(p.m_b.size() == 8);
  CHECK(p.v_b.size() == 8);
  CHECK(p.step_count == 0);
  CHECK(p.count() == 8 * 3 * 3 * 3 + 8);
}

TEST_CASE("missing gradients are rejected") {
  auto p = LayerParams<double>::make("conv", {1, 1, 1, 1}, 1);
  AdamConfig cfg;
  std::vector<LayerParams<double>*> params{&p};
  CHECK_THROWS_AS(adam_step(params, cfg), Error);
}

TEST_CASE("zero gradient leaves parameters unchanged, increments step") {
  auto p = LayerParams<double>::make("conv", {2, 2, 3, 3}, 2);
  Rng rng(41);
  for (auto& w : p.weights->v) w = rng.uniform(-1, 1);
  auto saved = p.weights->v;
  std::vector<LayerParams<double>*> params{&p};
  zero_grads(params);
  AdamConfig cfg{.lr = 0.1};
  adam_step(params, cfg);
  CHECK(p.weights->v == saved);
  CHECK(p.step_count == 1);
  adam_step(params, cfg);
  CHECK(p.step_count == 2);
}

TEST_CASE("single step on w=1, g=1, lr=0.1 lands near 0.9") {
  // Hand-computed recurrences: m=0.1, v=0.001, m_hat=1, v_hat=1,
  // w = 1 - 0.1 * 1/(1 + 1e-8).
  auto p = LayerParams<double>::make("w", {1, 1, 1, 1}, 1);
  p.weights->v[0] = 1.0;
  std::vector<LayerParams<double>*> params{&p};
  zero_grads(params);
  p.weights->g[0] = 1.0;
  adam_step(params, AdamConfig{.lr = 0.1});
  CHECK(p.weights->v[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("constant gradient drives steps toward lr * sign(g)") {
  auto p = LayerParams<double>::make("w", {1, 1, 1, 1}, 1);
  p.weights->v[0] = 5.0;
  std::vector<LayerParams<double>*> params{&p};
  AdamConfig cfg{.lr = 0.01};
  double prev = p.weights->v[0];
  for (int step = 0; step < 50; ++step) {
    zero_grads(params);
    p.weights->g[0] = -0.37;  // constant negative gradient
    adam_step(params, cfg);
    const double delta = p.weights->v[0] - prev;
    prev = p.weights->v[0];
    CHECK(delta == doctest::Approx(cfg.lr).epsilon(1e-5));
  }
}

TEST_CASE("bias updates follow the same recurrences") {
  auto p = LayerParams<double>::make("w", {1, 3, 1, 1}, 3);
  std::vector<LayerParams<double>*> params{&p};
  zero_grads(params);
  p.bias->g[0] = 1.0;
  p.bias->g[1] = -1.0;
  p.bias->g[2] = 0.0;
  adam_step(params, AdamConfig{.lr = 0.1});
  CHECK(p.bias->v[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p.bias->v[1] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(p.bias->v[2] == 0.0);
}
