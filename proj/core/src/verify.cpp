// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "adlr/gpt.hpp"
#include "adlr/nn.hpp"
#include "adlr/tensor.hpp"

namespace adlr {

namespace {

using DTensor = Tensor<double>;
using ScalarFn = std::function<DTensor(const std::vector<DTensor>&)>;

double max_rel_err(const ScalarFn& f, std::vector<DTensor> leaves,
                   double h = 1e-5) {
  for (auto& l : leaves) l.zero_grad();
  f(leaves).backward();
  std::vector<std::vector<double>> analytic;
  for (auto& l : leaves) analytic.emplace_back(l.grad().begin(), l.grad().end());

  double worst = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto data = leaves[li].mutable_data();
    for (size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      const double fp = f(leaves).item();
      data[i] = orig - h;
      const double fm = f(leaves).item();
      data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[li][i];
      worst = std::max(worst, std::abs(a - numeric) /
                                  std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
  }
  return worst;
}

DTensor leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> data(shape_size(shape));
  for (auto& v : data) v = rng.uniform(lo, hi);
  return DTensor::from(std::move(shape), std::move(data), true);
}

}  // namespace

std::vector<GradCheckEntry> verify_gradients() {
  std::vector<GradCheckEntry> entries;
  Rng rng(2026);
  auto record = [&](std::string name, double err, double tol) {
    entries.push_back({std::move(name), err, tol, err < tol});
  };

  record("add(row broadcast)",
         max_rel_err([](const auto& v) { return mean_all(add(v[0], v[1])); },
                     {leaf({3, 4}, rng), leaf({1, 4}, rng)}),
         1e-4);
  record("mul",
         max_rel_err([](const auto& v) { return sum_all(mul(v[0], v[1])); },
                     {leaf({3, 4}, rng), leaf({3, 4}, rng)}),
         1e-4);
  record("matmul",
         max_rel_err([](const auto& v) { return mean_all(matmul(v[0], v[1])); },
                     {leaf({3, 5}, rng), leaf({5, 2}, rng)}),
         1e-4);
  record("transpose",
         max_rel_err(
             [](const auto& v) { return sum_all(mul(transpose(v[0]), v[1])); },
             {leaf({3, 4}, rng), leaf({4, 3}, rng)}),
         1e-4);
  record("slice",
         max_rel_err([](const auto& v) { return sum_all(slice(v[0], 1, 3, 0, 2)); },
                     {leaf({4, 4}, rng)}),
         1e-4);
  record("concat",
         max_rel_err(
             [](const auto& v) {
               return mean_all(concat_cols<double>({v[0], v[1]}));
             },
             {leaf({2, 3}, rng), leaf({2, 2}, rng)}),
         1e-4);
  record("softmax",
         max_rel_err(
             [](const auto& v) { return sum_all(mul(softmax(v[0]), v[1])); },
             {leaf({3, 5}, rng, -2, 2), leaf({3, 5}, rng)}),
         1e-4);
  record("layer_norm",
         max_rel_err(
             [](const auto& v) {
               return sum_all(mul(layer_norm(v[0], v[1], v[2]), v[3]));
             },
             {leaf({3, 6}, rng, -2, 2), leaf({1, 6}, rng, 0.5, 1.5),
              leaf({1, 6}, rng), leaf({3, 6}, rng)}),
         1e-4);
  record("embedding_lookup",
         max_rel_err(
             [](const auto& v) {
               return sum_all(embedding_lookup(v[0], {0, 2, 2, 4}));
             },
             {leaf({5, 3}, rng)}),
         1e-4);
  record("cross_entropy",
         max_rel_err(
             [](const auto& v) { return cross_entropy(v[0], {1, 0, 3}); },
             {leaf({3, 4}, rng, -2, 2)}),
         1e-4);
  record("tanh",
         max_rel_err([](const auto& v) { return sum_all(tanh(v[0])); },
                     {leaf({2, 5}, rng, -2, 2)}),
         1e-4);
  record("sigmoid",
         max_rel_err([](const auto& v) { return sum_all(sigmoid(v[0])); },
                     {leaf({2, 5}, rng, -2, 2)}),
         1e-4);
  record("gelu",
         max_rel_err([](const auto& v) { return sum_all(gelu(v[0])); },
                     {leaf({2, 5}, rng, -2, 2)}),
         1e-4);
  record("dropout",
         max_rel_err(
             [](const auto& v) {
               Rng mask_rng(7);
               return sum_all(dropout(v[0], 0.25, mask_rng));
             },
             {leaf({3, 4}, rng)}),
         1e-4);
  record("masked_fill",
         max_rel_err(
             [](const auto& v) {
               return sum_all(mul(masked_fill(v[0], causal_mask(3), 0.5), v[0]));
             },
             {leaf({3, 3}, rng)}),
         1e-4);

  {
    LstmParams<double> p = LstmParams<double>::init(4, 5, rng, "lstm");
    auto x = leaf({3, 4}, rng);
    record("lstm_cell(chain over 3 steps)",
           max_rel_err(
               [&p](const auto& v) { return sum_all(lstm_final_state(v[0], p)); },
               {x}),
           1e-4);
    record("bilstm(parameters)",
           max_rel_err(
               [&x, &p](const auto& v) {
                 LstmParams<double> q;
                 q.input_dim = p.input_dim;
                 q.hidden = p.hidden;
                 q.w_x = v[0];
                 q.w_h = v[1];
                 q.b = v[2];
                 return sum_all(bilstm_readout(x, q, q));
               },
               {p.w_x, p.w_h, p.b}),
           1e-4);
  }

  {
    GptConfig cfg{.vocab_size = 9, .d_model = 8, .n_heads = 2, .n_layers = 2,
                  .context_len = 8, .dropout_p = 0.0};
    Rng model_rng(99);
    GptModel<double> model(cfg, model_rng, true);
    const std::vector<int> ids{1, 3, 5, 2, 8, 4};
    const std::vector<int> targets{3, 5, 2, 8, 4};
    record("decoder(composed 6-token graph)",
           max_rel_err(
               [&](const std::vector<DTensor>&) {
                 auto fwd = model.forward(ids);
                 return cross_entropy(slice(fwd.logits, 0, 5, 0, 9), targets);
               },
               model.parameters()),
           1e-3);
  }

  return entries;
}

bool all_passed(const std::vector<GradCheckEntry>& entries) {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

}  // namespace adlr
