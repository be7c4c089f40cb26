// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <adlr/nn.hpp>
#include <adlr/optim.hpp>

#include <cmath>

#include "gradcheck.hpp"

using namespace adlr;
using adlr::test::grad_check;
using adlr::test::random_leaf;

namespace {

LstmParams<double> zero_lstm(size_t input_dim, size_t hidden) {
  LstmParams<double> p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.w_x = Tensor<double>::zeros({input_dim, 4 * hidden});
  p.w_h = Tensor<double>::zeros({hidden, 4 * hidden});
  p.b = Tensor<double>::zeros({1, 4 * hidden});
  return p;
}

}  // namespace

TEST_CASE("lstm cell with zero weights and biases outputs zero state") {
  auto p = zero_lstm(3, 4);
  auto x = Tensor<double>::from({1, 3}, {0.5, -1.0, 2.0});
  auto h0 = Tensor<double>::zeros({1, 4});
  auto c0 = Tensor<double>::zeros({1, 4});
  auto [h, c] = lstm_cell(x, h0, c0, p);
  for (double v : h.data()) CHECK(v == 0.0);
  for (double v : c.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm gradient against finite differences") {
  Rng rng(5);
  auto x = random_leaf({3, 4}, rng);  // 3 timesteps
  LstmParams<double> p = LstmParams<double>::init(4, 5, rng, "lstm");
  double err = grad_check(
      [&p](const auto& v) { return sum_all(lstm_final_state(v[0], p)); }, {x});
  CHECK(err < 1e-4);

  // And with respect to the parameters.
  double perr = grad_check(
      [&x, &p](const auto& v) {
        LstmParams<double> q;
        q.input_dim = p.input_dim;
        q.hidden = p.hidden;
        q.w_x = v[0];
        q.w_h = v[1];
        q.b = v[2];
        return sum_all(lstm_final_state(x, q));
      },
      {p.w_x, p.w_h, p.b});
  CHECK(perr < 1e-4);
}

TEST_CASE("reversing the input swaps the roles of the two directions") {
  Rng rng(8);
  auto inputs = random_leaf({5, 3}, rng);
  std::vector<double> rev(inputs.size());
  for (size_t t = 0; t < 5; ++t)
    for (size_t j = 0; j < 3; ++j) rev[t * 3 + j] = inputs.at(4 - t, j);
  auto reversed = Tensor<double>::from({5, 3}, rev);

  auto f = LstmParams<double>::init(3, 4, rng, "f");
  auto b = LstmParams<double>::init(3, 4, rng, "b");

  auto out = bilstm_readout(inputs, f, b);
  auto out_rev_swapped = bilstm_readout(reversed, b, f);

  // forward half of one run equals backward half of the other.
  for (size_t j = 0; j < 4; ++j) {
    CHECK(out.at(0, j) == doctest::Approx(out_rev_swapped.at(0, 4 + j)).epsilon(1e-12));
    CHECK(out.at(0, 4 + j) == doctest::Approx(out_rev_swapped.at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("lstm forget gate bias starts at one, other biases at zero") {
  Rng rng(2);
  auto p = LstmParams<float>::init(3, 4, rng, "lstm");
  auto b = p.b.data();
  for (size_t j = 0; j < 4; ++j) CHECK(b[j] == 0.0f);
  for (size_t j = 4; j < 8; ++j) CHECK(b[j] == 1.0f);
  for (size_t j = 8; j < 16; ++j) CHECK(b[j] == 0.0f);
}

TEST_CASE("adam first step moves by roughly the learning rate") {
  auto p = Tensor<float>::param({1, 1}, {1.0f}, "w");
  Adam<float> opt({p}, AdamConfig{.lr = 1e-2});
  p.mutable_grad()[0] = 0.37f;  // any nonzero gradient
  opt.step();
  CHECK(p.data()[0] == doctest::Approx(1.0f - 1e-2f).epsilon(1e-4));
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  auto p = Tensor<float>::param({1, 3}, {1.0f, -2.0f, 0.5f}, "w");
  Adam<float> opt({p}, AdamConfig{});
  opt.step();
  opt.step();
  CHECK(p.data()[0] == 1.0f);
  CHECK(p.data()[1] == -2.0f);
  CHECK(p.data()[2] == 0.5f);
}

TEST_CASE("adam is bit-deterministic across runs") {
  auto run = [] {
    Rng rng(3);
    auto p = Tensor<float>::param(
        {4, 4}, to_scalar<float>(init_normal(16, 0.1, rng)), "w");
    Adam<float> opt({p}, AdamConfig{.lr = 3e-3});
    for (int step = 0; step < 25; ++step) {
      sum_all(mul(p, p)).backward();
      opt.step();
    }
    return std::vector<float>(p.data().begin(), p.data().end());
  };
  CHECK(run() == run());
}

TEST_CASE("adam reports the offending parameter on a non-finite gradient") {
  auto p = Tensor<float>::param({1, 1}, {1.0f}, "block0.w_qkv");
  Adam<float> opt({p}, AdamConfig{});
  p.mutable_grad()[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("block0.w_qkv"),
                       DivergenceError);
}
