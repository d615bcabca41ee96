// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "bpdec/graph.hpp"
#include "test_support.hpp"

using namespace bpdec;

TEST_SUITE("graph") {
  TEST_CASE("sum of squares at 3 has gradient 6") {
    ParamStore<double> params;
    params.insert("p.x", Tensor<double>::scalar(3.0));
    Graph<double> g(params);
    auto x = g.param("p.x");
    auto grads = g.backward(ops::sum(ops::mul(x, x)));
    CHECK(grads.at("p.x")[0] == 6.0);
  }

  TEST_CASE("unreachable parameters get zero gradients") {
    ParamStore<double> params;
    params.insert("p.used", Tensor<double>::filled({2}, 1.5));
    params.insert("p.unused", Tensor<double>::filled({3}, 2.0));
    Graph<double> g(params);
    auto grads = g.backward(ops::sum(ops::scale(g.param("p.used"), 2.0)));
    CHECK(grads.size() == 2);
    CHECK(grads.at("p.unused") == Tensor<double>::zeros({3}));
    CHECK(grads.at("p.used") == Tensor<double>::filled({2}, 2.0));
  }

  TEST_CASE("repeated param lookups share one leaf") {
    ParamStore<double> params;
    params.insert("p.w", Tensor<double>({1, 1}, {2.0}));
    Graph<double> g(params);
    auto a = g.param("p.w");
    auto b = g.param("p.w");
    CHECK(a.id == b.id);
    auto grads = g.backward(ops::sum(ops::add(ops::mul(a, a), b)));
    CHECK(grads.at("p.w")[0] == 5.0);
  }

  TEST_CASE("non-scalar loss is rejected") {
    ParamStore<double> params;
    params.insert("p.x", Tensor<double>::filled({2}, 1.0));
    Graph<double> g(params);
    CHECK_THROWS_AS(g.backward(g.param("p.x")), std::invalid_argument);
  }

  TEST_CASE("backward runs once per graph") {
    ParamStore<double> params;
    params.insert("p.x", Tensor<double>::scalar(1.0));
    Graph<double> g(params);
    auto loss = ops::sum(ops::mul(g.param("p.x"), g.param("p.x")));
    g.backward(loss);
    CHECK(g.consumed());
    CHECK_THROWS_AS(g.backward(loss), std::logic_error);
  }

  TEST_CASE("each record is visited once in reverse order") {
    ParamStore<double> params;
    params.insert("p.x", Tensor<double>::scalar(2.0));
    Graph<double> g(params);
    std::vector<std::size_t> order;
    auto x = g.param("p.x");
    auto chain = x;
    for (int i = 0; i < 4; ++i) {
      auto in = chain;
      chain = g.record("tag", in.value(), {in}, [&order, in](Graph<double>& gg, Var<double> self) {
        order.push_back(self.id);
        auto& gin = gg.grad(in);
        gin[0] += gg.grad(self)[0];
      });
    }
    auto grads = g.backward(chain);
    CHECK(grads.at("p.x")[0] == 1.0);
    REQUIRE(order.size() == 4);
    for (std::size_t i = 1; i < order.size(); ++i) CHECK(order[i] < order[i - 1]);
    CHECK(g.backward_visits() == 4);
  }

  TEST_CASE("constants do not record backward closures") {
    Graph<double> g;
    auto a = g.constant(Tensor<double>({1, 2}, {1, 2}));
    auto b = ops::scale(a, 3.0);
    CHECK_FALSE(g.requires_grad(b));
  }

  TEST_CASE("signature lists ops and shapes") {
    ParamStore<double> params;
    params.insert("p.w", Tensor<double>({2, 3}));
    auto build = [&](std::size_t rows) {
      Graph<double> g(params);
      auto x = g.constant(Tensor<double>({rows, 2}));
      ops::matmul(x, g.param("p.w"));
      return g.signature();
    };
    CHECK(build(4) == build(4));
    CHECK(build(4) != build(5));
    CHECK(build(4).find("matmul") != std::string::npos);
  }

  TEST_CASE("matmul gradients follow the product rule") {
    Rng rng(9, "graph");
    ParamStore<double> params;
    params.insert("p.a", testing::random_tensor({3, 4}, rng));
    params.insert("p.b", testing::random_tensor({4, 2}, rng));
    Graph<double> g(params);
    auto grads = g.backward(ops::sum(ops::matmul(g.param("p.a"), g.param("p.b"))));
    const auto& a = params.at("p.a");
    const auto& b = params.at("p.b");
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 4; ++k) {
        double ref = 0.0;
        for (std::size_t j = 0; j < 2; ++j) ref += b(k, j);
        CHECK(grads.at("p.a")(i, k) == doctest::Approx(ref).epsilon(1e-14));
      }
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t j = 0; j < 2; ++j) {
        double ref = 0.0;
        for (std::size_t i = 0; i < 3; ++i) ref += a(i, k);
        CHECK(grads.at("p.b")(k, j) == doctest::Approx(ref).epsilon(1e-14));
      }
  }

  TEST_CASE("param names follow the grammar") {
    CHECK(is_valid_param_name("embeddings.token"));
    CHECK(is_valid_param_name("encoder.layer.3.attn.wq"));
    CHECK_FALSE(is_valid_param_name("single"));
    CHECK_FALSE(is_valid_param_name("a..b"));
    CHECK_FALSE(is_valid_param_name("Upper.case"));
    ParamStore<float> store;
    store.insert("a.b", Tensor<float>({1}));
    CHECK_THROWS(store.insert("a.b", Tensor<float>({1})));
    CHECK_THROWS(store.insert("bad", Tensor<float>({1})));
  }
}
