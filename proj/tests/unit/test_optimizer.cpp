// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "bpdec/optimizer.hpp"
#include "test_support.hpp"

using namespace bpdec;
using bpdec::testing::random_tensor;

namespace {

ParamStore<double> random_store(Rng& rng) {
  ParamStore<double> p;
  p.insert("a.w", random_tensor({3, 4}, rng));
  p.insert("a.b", random_tensor({4}, rng));
  return p;
}

std::vector<double> flat_delta(const ParamStore<double>& before, const ParamStore<double>& after) {
  std::vector<double> d;
  for (const auto& [name, t] : before)
    for (std::size_t i = 0; i < t.size(); ++i) d.push_back(after.at(name)[i] - t[i]);
  return d;
}

}  // namespace

TEST_SUITE("optimizer") {
  TEST_CASE("zero gradients leave parameters unchanged") {
    Rng rng(1, "opt");
    auto params = random_store(rng);
    const auto before = params;
    auto state = AdamState<double>::zeros_like(params);
    adam_step(params, state, params.zeros_like(), {}, 0.1);
    CHECK(params == before);
    CHECK(state.step == 1);
  }

  TEST_CASE("one-dimensional quadratic converges") {
    ParamStore<double> params;
    params.insert("q.x", Tensor<double>::scalar(0.0));
    auto state = AdamState<double>::zeros_like(params);
    const double target = 3.0;
    std::size_t steps = 0;
    while (steps < 500 && std::abs(params.at("q.x")[0] - target) >= 1e-6) {
      ParamStore<double> grads;
      grads.insert("q.x", Tensor<double>::scalar(2.0 * (params.at("q.x")[0] - target)));
      adam_step(params, state, grads, {}, 0.1);
      ++steps;
    }
    CHECK(std::abs(params.at("q.x")[0] - target) < 1e-6);
    CHECK(steps <= 500);
  }

  TEST_CASE("first update matches the closed form") {
    ParamStore<double> params;
    params.insert("q.x", Tensor<double>({2}, {1.0, -2.0}));
    auto state = AdamState<double>::zeros_like(params);
    ParamStore<double> grads;
    grads.insert("q.x", Tensor<double>({2}, {0.5, -4.0}));
    AdamHyper hyper;
    hyper.weight_decay = 0.01;
    adam_step(params, state, grads, hyper, 0.1);
    // m̂ = g, v̂ = g², so the step is lr·(sign(g)·|g|/(|g| + ε) + wd·p)
    CHECK(params.at("q.x")[0] == doctest::Approx(1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01)).epsilon(1e-14));
    CHECK(params.at("q.x")[1] == doctest::Approx(-2.0 - 0.1 * (-4.0 / (4.0 + 1e-8) - 0.02)).epsilon(1e-14));
  }

  TEST_CASE("identical inputs give identical states") {
    Rng rng(2, "opt");
    const auto params = random_store(rng);
    const auto grads = random_store(rng);
    auto p1 = params, p2 = params;
    auto s1 = AdamState<double>::zeros_like(params), s2 = s1;
    for (int i = 0; i < 5; ++i) {
      adam_step(p1, s1, grads, {}, 0.01);
      adam_step(p2, s2, grads, {}, 0.01);
    }
    CHECK(p1 == p2);
    CHECK(s1 == s2);
  }

  TEST_CASE("non-finite gradients are rejected without side effects") {
    Rng rng(3, "opt");
    auto params = random_store(rng);
    auto grads = random_store(rng);
    auto state = AdamState<double>::zeros_like(params);
    adam_step(params, state, grads, {}, 0.01);
    const auto params_before = params;
    const auto state_before = state;
    for (double bad : {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()}) {
      auto broken = grads;
      broken.at("a.w")(1, 2) = bad;
      try {
        adam_step(params, state, broken, {}, 0.01);
        FAIL("expected rejection");
      } catch (const NonFiniteGradient& e) {
        CHECK(e.name() == "a.w");
      }
      CHECK(params == params_before);
      CHECK(state == state_before);
    }
  }

  TEST_CASE("loss scale does not change the update direction") {
    Rng rng(4, "opt");
    const auto params = random_store(rng);
    const auto grads = random_store(rng);
    AdamHyper hyper;
    hyper.eps = 1e-12;
    for (double c : {1e-3, 0.5, 7.0, 1e4}) {
      auto p1 = params, p2 = params;
      auto s1 = AdamState<double>::zeros_like(params), s2 = s1;
      ParamStore<double> scaled = grads;
      for (auto& [name, t] : scaled)
        for (auto& v : t.storage()) v *= c;
      adam_step(p1, s1, grads, hyper, 0.01);
      adam_step(p2, s2, scaled, hyper, 0.01 / c);
      const auto d1 = flat_delta(params, p1), d2 = flat_delta(params, p2);
      double n1 = 0.0, n2 = 0.0, dot = 0.0;
      for (std::size_t i = 0; i < d1.size(); ++i) {
        n1 += d1[i] * d1[i];
        n2 += d2[i] * d2[i];
        dot += d1[i] * d2[i];
      }
      CHECK(std::abs(dot / std::sqrt(n1 * n2) - 1.0) < 1e-6);
      for (std::size_t i = 0; i < d1.size(); ++i) CHECK(std::abs(d2[i] * c - d1[i]) < 1e-6 * std::abs(d1[i]) + 1e-15);
    }
  }

  TEST_CASE("warmup then linear decay") {
    TrainConfig t;
    t.steps = 100;
    t.warmup_frac = 0.1;
    t.learning_rate = 1.0;
    CHECK(learning_rate_at(t, 1) == doctest::Approx(0.1));
    CHECK(learning_rate_at(t, 5) == doctest::Approx(0.5));
    CHECK(learning_rate_at(t, 10) == doctest::Approx(1.0));
    CHECK(learning_rate_at(t, 11) == doctest::Approx(90.0 / 91.0));
    CHECK(learning_rate_at(t, 100) == doctest::Approx(1.0 / 91.0));
    CHECK(learning_rate_at(t, 101) == 0.0);
    for (std::size_t u = 11; u <= 100; ++u) CHECK(learning_rate_at(t, u) < learning_rate_at(t, u - 1));
    t.warmup_frac = 0.0;
    CHECK(learning_rate_at(t, 1) == doctest::Approx(100.0 / 101.0));
    CHECK(learning_rate_at(t, 0) == 0.0);
  }
}
