// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <adlr/tensor.hpp>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"

using namespace adlr;
using adlr::test::DTensor;
using adlr::test::grad_check;
using adlr::test::random_leaf;

TEST_CASE("softmax of a constant row is uniform") {
  auto x = Tensor<double>::from({1, 3}, {0.0, 0.0, 0.0});
  auto y = softmax(x);
  for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax rows are non-negative and sum to one") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t m = 1 + rng.bounded(5), n = 2 + rng.bounded(6);
    auto x = random_leaf({m, n}, rng, -4.0, 4.0);
    auto y = softmax(x);
    for (size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      for (size_t j = 0; j < n; ++j) {
        CHECK(y.at(i, j) >= 0.0);
        sum += y.at(i, j);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("cross entropy of uniform logits is log of the class count") {
  auto logits = Tensor<double>::from({3, 8}, std::vector<double>(24, 0.0));
  auto loss = cross_entropy(logits, {0, 5, 7});
  CHECK(loss.item() == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("masked softmax rows have exact zeros at masked entries") {
  Rng rng(3);
  const size_t n = 6;
  auto x = random_leaf({n, n}, rng, -2.0, 2.0);
  auto y = softmax(masked_fill(x, causal_mask(n),
                               -std::numeric_limits<double>::infinity()));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) CHECK(y.at(i, j) == 0.0);
}

TEST_CASE("gradient checks for every differentiable op") {
  Rng rng(11);

  SUBCASE("add, same shape") {
    auto a = random_leaf({3, 4}, rng), b = random_leaf({3, 4}, rng);
    CHECK(grad_check([](const auto& v) { return mean_all(add(v[0], v[1])); },
                     {a, b}) < 1e-4);
  }
  SUBCASE("add, row broadcast") {
    auto a = random_leaf({3, 4}, rng), b = random_leaf({1, 4}, rng);
    CHECK(grad_check([](const auto& v) { return mean_all(add(v[0], v[1])); },
                     {a, b}) < 1e-4);
  }
  SUBCASE("mul, scalar broadcast") {
    auto a = random_leaf({3, 4}, rng), b = random_leaf({1, 1}, rng);
    CHECK(grad_check([](const auto& v) { return mean_all(mul(v[0], v[1])); },
                     {a, b}) < 1e-4);
  }
  SUBCASE("mul, same shape") {
    auto a = random_leaf({2, 5}, rng), b = random_leaf({2, 5}, rng);
    CHECK(grad_check([](const auto& v) { return sum_all(mul(v[0], v[1])); },
                     {a, b}) < 1e-4);
  }
  SUBCASE("matmul") {
    auto a = random_leaf({3, 4}, rng), b = random_leaf({4, 2}, rng);
    CHECK(grad_check(
              [](const auto& v) { return mean_all(matmul(v[0], v[1])); },
              {a, b}) < 1e-4);
  }
  SUBCASE("transpose") {
    auto a = random_leaf({3, 4}, rng), b = random_leaf({3, 2}, rng);
    CHECK(grad_check(
              [](const auto& v) {
                return mean_all(matmul(transpose(v[0]), v[1]));
              },
              {a, b}) < 1e-4);
  }
  SUBCASE("slice") {
    auto a = random_leaf({4, 5}, rng);
    CHECK(grad_check(
              [](const auto& v) { return sum_all(slice(v[0], 1, 3, 2, 5)); },
              {a}) < 1e-4);
  }
  SUBCASE("concat rows and cols") {
    auto a = random_leaf({2, 3}, rng), b = random_leaf({1, 3}, rng);
    CHECK(grad_check(
              [](const auto& v) {
                return sum_all(mul(concat_rows<double>({v[0], v[1]}),
                                   concat_rows<double>({v[0], v[1]})));
              },
              {a, b}) < 1e-4);
    auto c = random_leaf({2, 2}, rng);
    CHECK(grad_check(
              [](const auto& v) {
                return mean_all(concat_cols<double>({v[0], v[1]}));
              },
              {a, c}) < 1e-4);
  }
  SUBCASE("tanh sigmoid gelu") {
    auto a = random_leaf({2, 6}, rng, -2.0, 2.0);
    CHECK(grad_check([](const auto& v) { return sum_all(tanh(v[0])); }, {a}) < 1e-4);
    CHECK(grad_check([](const auto& v) { return sum_all(sigmoid(v[0])); }, {a}) <
          1e-4);
    CHECK(grad_check([](const auto& v) { return sum_all(gelu(v[0])); }, {a}) < 1e-4);
  }
  SUBCASE("softmax") {
    auto a = random_leaf({3, 5}, rng, -2.0, 2.0);
    auto w = random_leaf({3, 5}, rng);
    CHECK(grad_check(
              [](const auto& v) { return sum_all(mul(softmax(v[0]), v[1])); },
              {a, w}) < 1e-4);
  }
  SUBCASE("layer_norm") {
    auto x = random_leaf({3, 6}, rng, -2.0, 2.0);
    auto g = random_leaf({1, 6}, rng, 0.5, 1.5);
    auto b = random_leaf({1, 6}, rng);
    auto w = random_leaf({3, 6}, rng);
    CHECK(grad_check(
              [](const auto& v) {
                return sum_all(mul(layer_norm(v[0], v[1], v[2]), v[3]));
              },
              {x, g, b, w}) < 1e-4);
  }
  SUBCASE("embedding_lookup") {
    auto table = random_leaf({7, 4}, rng);
    CHECK(grad_check(
              [](const auto& v) {
                return sum_all(embedding_lookup(v[0], {1, 3, 3, 6, 0}));
              },
              {table}) < 1e-4);
  }
  SUBCASE("cross_entropy") {
    auto logits = random_leaf({4, 6}, rng, -2.0, 2.0);
    CHECK(grad_check(
              [](const auto& v) { return cross_entropy(v[0], {2, 0, 5, 1}); },
              {logits}) < 1e-4);
  }
  SUBCASE("dropout with a fixed mask") {
    auto a = random_leaf({3, 4}, rng);
    CHECK(grad_check(
              [](const auto& v) {
                Rng mask_rng(99);
                return sum_all(dropout(v[0], 0.3, mask_rng));
              },
              {a}) < 1e-4);
  }
  SUBCASE("masked_fill") {
    auto a = random_leaf({3, 3}, rng);
    CHECK(grad_check(
              [](const auto& v) {
                return sum_all(mul(masked_fill(v[0], causal_mask(3), 0.5), v[0]));
              },
              {a}) < 1e-4);
  }
}

TEST_CASE("gradient checks on randomized shapes") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t m = 1 + rng.bounded(4);
    const size_t k = 1 + rng.bounded(4);
    const size_t n = 1 + rng.bounded(4);
    auto a = random_leaf({m, k}, rng);
    auto b = random_leaf({k, n}, rng);
    auto g = random_leaf({1, static_cast<size_t>(n)}, rng, 0.5, 1.5);
    auto bias = random_leaf({1, static_cast<size_t>(n)}, rng);
    double err = grad_check(
        [](const auto& v) {
          return mean_all(tanh(layer_norm(matmul(v[0], v[1]), v[2], v[3])));
        },
        {a, b, g, bias});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("composed graph matches manually chained Jacobians") {
  // y = sum(tanh(x W)); dy/dW = x^T (1 - tanh^2(xW)), dy/dx = (1-tanh^2(xW)) W^T.
  std::vector<double> xv{0.3, -0.7, 1.1, 0.4, -0.2, 0.9};
  std::vector<double> wv{0.5, -0.4, 0.8, 0.1, -0.6, 0.2};
  auto x = DTensor::from({2, 3}, xv, true);
  auto w = DTensor::from({3, 2}, wv, true);
  auto y = sum_all(tanh(matmul(x, w)));
  y.backward();

  double z[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      z[i][j] = 0.0;
      for (int p = 0; p < 3; ++p) z[i][j] += xv[i * 3 + p] * wv[p * 2 + j];
    }
  for (int i = 0; i < 2; ++i)
    for (int p = 0; p < 3; ++p) {
      double expected = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double t = std::tanh(z[i][j]);
        expected += (1.0 - t * t) * wv[p * 2 + j];
      }
      CHECK(x.grad()[i * 3 + p] == doctest::Approx(expected).epsilon(1e-12));
    }
  for (int p = 0; p < 3; ++p)
    for (int j = 0; j < 2; ++j) {
      double expected = 0.0;
      for (int i = 0; i < 2; ++i) {
        const double t = std::tanh(z[i][j]);
        expected += xv[i * 3 + p] * (1.0 - t * t);
      }
      CHECK(w.grad()[p * 2 + j] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("a tensor used twice accumulates both contributions") {
  auto x = DTensor::from({1, 3}, {1.0, 2.0, 3.0}, true);
  sum_all(mul(x, x)).backward();
  for (int i = 0; i < 3; ++i)
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i]));
}

TEST_CASE("shape errors name the op and both shapes") {
  auto a = Tensor<float>::zeros({2, 3});
  auto b = Tensor<float>::zeros({2, 3});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), ShapeError);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), ShapeError);
}

TEST_CASE("identical graphs produce bit-identical results") {
  auto run = [] {
    Rng rng(5);
    auto a = Tensor<float>::from({8, 8}, std::vector<float>(64));
    {
      auto d = a.mutable_data();
      for (auto& v : d) v = static_cast<float>(rng.normal(0.0, 1.0));
    }
    auto y = softmax(matmul(a, transpose(a)));
    return std::vector<float>(y.data().begin(), y.data().end());
  };
  auto r1 = run();
  auto r2 = run();
  CHECK(r1 == r2);
}

TEST_CASE("NoGradGuard suppresses graph construction") {
  auto a = Tensor<float>::from({2, 2}, {1, 2, 3, 4}, true);
  NoGradGuard ng;
  auto y = mul(a, a);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("deep chains neither overflow the stack in backward nor teardown") {
  auto x = DTensor::from({1, 4}, {0.1, 0.2, 0.3, 0.4}, true);
  DTensor y = x;
  for (int i = 0; i < 20000; ++i) y = scale(y, 0.9999);
  sum_all(y).backward();
  CHECK(x.grad()[0] > 0.0);
}
