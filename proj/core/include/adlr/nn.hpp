// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable layers built from tensor primitives: dense init helpers,
// the LSTM cell, and bi-directional final-state readouts.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adlr/rng.hpp"
#include "adlr/tensor.hpp"

namespace adlr {

template <typename S>
std::vector<S> to_scalar(const std::vector<double>& v) {
  return std::vector<S>(v.begin(), v.end());
}

// Projection / embedding weight: N(0, 0.02), the GPT-2 convention.
template <typename S>
Tensor<S> dense_param(size_t rows, size_t cols, Rng& rng, std::string name,
                      double stddev = 0.02) {
  return Tensor<S>::param({rows, cols}, to_scalar<S>(init_normal(rows * cols, stddev, rng)),
                          std::move(name));
}

template <typename S>
Tensor<S> zeros_param(size_t rows, size_t cols, std::string name) {
  return Tensor<S>::param({rows, cols}, std::vector<S>(rows * cols, S(0)),
                          std::move(name));
}

template <typename S>
Tensor<S> ones_param(size_t rows, size_t cols, std::string name) {
  return Tensor<S>::param({rows, cols}, std::vector<S>(rows * cols, S(1)),
                          std::move(name));
}

// LSTM parameters. Gate blocks along the 4H axis are ordered
// [input, forget, cell, output]. Kernels are Xavier-uniform, biases zero
// except the forget-gate block, which starts at 1.
template <typename S>
struct LstmParams {
  size_t input_dim = 0;
  size_t hidden = 0;
  Tensor<S> w_x;  // [input_dim, 4H]
  Tensor<S> w_h;  // [H, 4H]
  Tensor<S> b;    // [1, 4H]

  static LstmParams init(size_t input_dim, size_t hidden, Rng& rng,
                         const std::string& prefix) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.w_x = Tensor<S>::param({input_dim, 4 * hidden},
                             to_scalar<S>(init_xavier_uniform(input_dim, 4 * hidden, rng)),
                             prefix + ".w_x");
    p.w_h = Tensor<S>::param({hidden, 4 * hidden},
                             to_scalar<S>(init_xavier_uniform(hidden, 4 * hidden, rng)),
                             prefix + ".w_h");
    std::vector<S> bias(4 * hidden, S(0));
    for (size_t j = hidden; j < 2 * hidden; ++j) bias[j] = S(1);
    p.b = Tensor<S>::param({1, 4 * hidden}, std::move(bias), prefix + ".b");
    return p;
  }

  std::vector<Tensor<S>> params() const { return {w_x, w_h, b}; }
};

// One LSTM step. x_t [1, input_dim], h_prev/c_prev [1, H] -> (h_t, c_t).
template <typename S>
std::pair<Tensor<S>, Tensor<S>> lstm_cell(const Tensor<S>& x_t,
                                          const Tensor<S>& h_prev,
                                          const Tensor<S>& c_prev,
                                          const LstmParams<S>& p) {
  const size_t h = p.hidden;
  Tensor<S> z = add(add(matmul(x_t, p.w_x), matmul(h_prev, p.w_h)), p.b);
  Tensor<S> gate_i = sigmoid(slice(z, 0, 1, 0, h));
  Tensor<S> gate_f = sigmoid(slice(z, 0, 1, h, 2 * h));
  Tensor<S> gate_g = tanh(slice(z, 0, 1, 2 * h, 3 * h));
  Tensor<S> gate_o = sigmoid(slice(z, 0, 1, 3 * h, 4 * h));
  Tensor<S> c_t = add(mul(gate_f, c_prev), mul(gate_i, gate_g));
  Tensor<S> h_t = mul(gate_o, tanh(c_t));
  return {h_t, c_t};
}

// Runs an LSTM over the rows of `inputs` [T, input_dim] from zero state and
// returns the final hidden state [1, H]. `reversed` walks rows T-1 .. 0.
template <typename S>
Tensor<S> lstm_final_state(const Tensor<S>& inputs, const LstmParams<S>& p,
                           bool reversed = false) {
  const size_t t_len = inputs.rows();
  Tensor<S> h = Tensor<S>::zeros({1, p.hidden});
  Tensor<S> c = Tensor<S>::zeros({1, p.hidden});
  for (size_t step = 0; step < t_len; ++step) {
    const size_t t = reversed ? t_len - 1 - step : step;
    auto [h2, c2] = lstm_cell(row(inputs, t), h, c, p);
    h = h2;
    c = c2;
  }
  return h;
}

// Bi-directional readout: concatenation of the forward pass's final state
// and the backward pass's final state, shape [1, 2H].
template <typename S>
Tensor<S> bilstm_readout(const Tensor<S>& inputs, const LstmParams<S>& fwd,
                         const LstmParams<S>& bwd) {
  return concat_cols<S>(
      {lstm_final_state(inputs, fwd, false), lstm_final_state(inputs, bwd, true)});
}

}  // namespace adlr
