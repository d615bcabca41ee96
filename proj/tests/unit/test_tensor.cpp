// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bpdec/graph.hpp"
#include "test_support.hpp"

using namespace bpdec;
using bpdec::testing::naive_matmul;
using bpdec::testing::naive_softmax;
using bpdec::testing::naive_standardize;
using bpdec::testing::random_tensor;

namespace {

Tensor<double> eval_unary(const Tensor<double>& x, Var<double> (*op)(Var<double>)) {
  Graph<double> g;
  return op(g.constant(x)).value();
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("shape and data must agree") {
    CHECK_THROWS_AS(Tensor<double>({2, 3}, std::vector<double>(5)), std::invalid_argument);
    Tensor<float> t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(Tensor<double>::scalar(4.5).item() == 4.5);
    CHECK_THROWS(t.item());
  }

  TEST_CASE("matmul identity and zero") {
    Rng rng(1, "t");
    const auto b = random_tensor({3, 4}, rng);
    Tensor<double> eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    Graph<double> g;
    CHECK(ops::matmul(g.constant(eye), g.constant(b)).value() == b);

    const Tensor<double> a({2, 2}, {1, 2, 3, 4});
    const auto z = ops::matmul(g.constant(a), g.constant(Tensor<double>({2, 1}))).value();
    CHECK(z == Tensor<double>({2, 1}, {0, 0}));
  }

  TEST_CASE("matmul matches triple loop") {
    Rng rng(2, "t");
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 1 + rng.below(7), k = 1 + rng.below(7), n = 1 + rng.below(7);
      const auto a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
      Graph<double> g;
      const auto c = ops::matmul(g.constant(a), g.constant(b)).value();
      const auto ref = naive_matmul(a, b);
      REQUIRE(c.shape() == ref.shape());
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    Rng fixed(3, "t");
    const auto a = random_tensor({4, 5}, fixed), b = random_tensor({5, 6}, fixed);
    Graph<double> g;
    const auto c = ops::matmul(g.constant(a), g.constant(b)).value();
    const auto ref = naive_matmul(a, b);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c[i] - ref[i]) < 1e-12);
  }

  TEST_CASE("matmul shape mismatch names both shapes") {
    Graph<double> g;
    try {
      ops::matmul(g.constant(Tensor<double>({2, 3})), g.constant(Tensor<double>({4, 2})));
      FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
      const std::string what = e.what();
      CHECK(what.find("[2x3]") != std::string::npos);
      CHECK(what.find("[4x2]") != std::string::npos);
    }
  }

  TEST_CASE("softmax examples") {
    const auto half = eval_unary(Tensor<double>({1, 2}, {0, 0}), &ops::softmax_rows<double>);
    CHECK(half[0] == 0.5);
    CHECK(half[1] == 0.5);

    const auto big = eval_unary(Tensor<double>({1, 2}, {1000, 0}), &ops::softmax_rows<double>);
    CHECK(std::isfinite(big[0]));
    CHECK(std::abs(big[0] - 1.0) < 1e-9);
    CHECK(std::abs(big[1]) < 1e-9);

    const auto s = eval_unary(Tensor<double>({1, 3}, {1, 2, 3}), &ops::softmax_rows<double>);
    const auto ref = naive_softmax({1, 2, 3});
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s[i] - ref[i]) < 1e-12);
  }

  TEST_CASE("softmax rows sum to one and commute with column permutations") {
    Rng rng(4, "t");
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t r = 1 + rng.below(5), c = 1 + rng.below(9);
      const auto x = random_tensor({r, c}, rng, 20.0);
      const auto y = eval_unary(x, &ops::softmax_rows<double>);
      std::vector<std::size_t> perm(c);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm.begin(), perm.end());
      Tensor<double> xp({r, c});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) xp(i, j) = x(i, perm[j]);
      const auto yp = eval_unary(xp, &ops::softmax_rows<double>);
      for (std::size_t i = 0; i < r; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          CHECK(y(i, j) >= 0.0);
          total += y(i, j);
          CHECK(std::abs(yp(i, j) - y(i, perm[j])) < 1e-15);
        }
        CHECK(std::abs(total - 1.0) < 1e-6);
      }
    }
  }

  TEST_CASE("layer_norm examples") {
    Graph<double> g;
    auto ones = g.constant(Tensor<double>::filled({4}, 1.0));
    auto zeros = g.constant(Tensor<double>({4}));
    const auto flat = ops::layer_norm(g.constant(Tensor<double>::filled({1, 4}, 7.0)), ones, zeros, 1e-12).value();
    for (double v : flat.storage()) CHECK(v == 0.0);

    auto one2 = g.constant(Tensor<double>::filled({2}, 1.0));
    auto zero2 = g.constant(Tensor<double>({2}));
    const auto two = ops::layer_norm(g.constant(Tensor<double>({1, 2}, {1, 3})), one2, zero2, 1e-12).value();
    CHECK(two[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(two[1] == doctest::Approx(1.0).epsilon(1e-9));

    auto one1 = g.constant(Tensor<double>::filled({1}, 1.0));
    auto zero1 = g.constant(Tensor<double>({1}));
    CHECK_THROWS(ops::layer_norm(g.constant(Tensor<double>({3, 1})), one1, zero1, 1e-12));
  }

  TEST_CASE("layer_norm matches the mean/variance formula") {
    Rng rng(5, "t");
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t h = 2 + rng.below(15);
      const auto x = random_tensor({1, h}, rng, 5.0);
      const auto gamma = random_tensor({h}, rng), beta = random_tensor({h}, rng);
      Graph<double> g;
      const auto y = ops::layer_norm(g.constant(x), g.constant(gamma), g.constant(beta), 1e-12).value();
      const auto xhat = naive_standardize(x.storage(), 1e-12);
      for (std::size_t i = 0; i < h; ++i) CHECK(std::abs(y[i] - (gamma[i] * xhat[i] + beta[i])) < 1e-10);
    }
  }

  TEST_CASE("layer_norm ignores additive shifts") {
    Rng rng(6, "t");
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t r = 1 + rng.below(4), h = 2 + rng.below(12);
      auto x = random_tensor({r, h}, rng, 3.0);
      const auto gamma = random_tensor({h}, rng), beta = random_tensor({h}, rng);
      const double c = 10.0 * (2.0 * rng.uniform() - 1.0);
      auto shifted = x;
      for (auto& v : shifted.storage()) v += c;
      Graph<double> g;
      const auto a = ops::layer_norm(g.constant(x), g.constant(gamma), g.constant(beta), 1e-12).value();
      const auto b = ops::layer_norm(g.constant(shifted), g.constant(gamma), g.constant(beta), 1e-12).value();
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-8);
    }
  }

  TEST_CASE("gelu examples") {
    const auto y = eval_unary(Tensor<double>({1, 3}, {0.0, 10.0, -10.0}), &ops::gelu<double>);
    CHECK(y[0] == 0.0);
    CHECK(std::abs(y[1] - 10.0) < 1e-4);
    CHECK(std::abs(y[2]) < 1e-4);
    const double x = 0.7;
    const double ref = 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
    CHECK(eval_unary(Tensor<double>({1, 1}, {x}), &ops::gelu<double>)[0] == doctest::Approx(ref).epsilon(1e-15));
  }

  TEST_CASE("cross_entropy_masked examples") {
    Graph<double> g;
    const auto uniform = ops::cross_entropy_masked(g.constant(Tensor<double>({1, 8})), {3}, {true}).value().item();
    CHECK(uniform == doctest::Approx(std::log(8.0)).epsilon(1e-14));

    Tensor<double> peaked({1, 4});
    peaked(0, 2) = 1e4;
    CHECK(ops::cross_entropy_masked(g.constant(peaked), {2}, {true}).value().item() < 1e-12);

    const Tensor<double> logits({3, 3}, {0.5, -1.0, 2.0, 1.0, 1.0, 0.0, 9.0, 9.0, 9.0});
    const double l0 = -std::log(naive_softmax({0.5, -1.0, 2.0})[0]);
    const double l1 = -std::log(naive_softmax({1.0, 1.0, 0.0})[2]);
    const double got =
        ops::cross_entropy_masked(g.constant(logits), {0, 2, -1}, {true, true, false}).value().item();
    CHECK(std::abs(got - 0.5 * (l0 + l1)) < 1e-10);

    CHECK_THROWS(ops::cross_entropy_masked(g.constant(logits), {0, 0, 0}, {false, false, false}));
  }
}
