// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "adlr/errors.hpp"
#include "adlr/tensor.hpp"

namespace adlr {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Updates parameter values in place and
// zeroes their gradients after each step. A missing gradient buffer counts
// as an all-zero gradient.
template <typename S>
class Adam {
 public:
  Adam(std::vector<Tensor<S>> params, AdamConfig cfg)
      : cfg_(cfg) {
    slots_.reserve(params.size());
    for (auto& p : params) {
      Slot s;
      s.m.assign(p.size(), 0.0);
      s.v.assign(p.size(), 0.0);
      s.param = std::move(p);
      slots_.push_back(std::move(s));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& s : slots_) {
      auto values = s.param.mutable_data();
      const bool has_grad = s.param.has_grad();
      auto grads = s.param.mutable_grad();
      for (size_t i = 0; i < values.size(); ++i) {
        const double g = has_grad ? static_cast<double>(grads[i]) : 0.0;
        if (!std::isfinite(g))
          throw DivergenceError("non-finite gradient in parameter '" +
                                s.param.name() + "'");
        s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
        s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = s.m[i] / bc1;
        const double v_hat = s.v[i] / bc2;
        values[i] -= static_cast<S>(cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
      }
      s.param.zero_grad();
    }
  }

  int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    Tensor<S> param;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace adlr
