// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace adlr {

// Deterministic pseudo-random stream: xoshiro256++ seeded via splitmix64.
// All state updates are pure 64-bit integer arithmetic, so a given seed
// yields the same stream on every platform. Every random choice in the
// repo (initialization, shuffling, dropout, synthesis) flows through this
// class; nothing uses std::random_device or <random> engines.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Gaussian via Box-Muller with a cached spare.
  double normal(double mean, double stddev);

  // Unbiased integer in [0, n) via rejection sampling. n must be > 0.
  uint64_t bounded(uint64_t n);

  // In-place Fisher-Yates: for i = n-1 .. 1, swap(v[i], v[bounded(i+1)]).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(bounded(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::array<uint64_t, 4> state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Samples from N(0, stddev^2).
std::vector<double> init_normal(size_t n, double stddev, Rng& rng);

// Xavier/Glorot uniform over [-limit, limit], limit = sqrt(6/(fan_in+fan_out)).
// Returns fan_in * fan_out values in row-major order.
std::vector<double> init_xavier_uniform(size_t fan_in, size_t fan_out, Rng& rng);

}  // namespace adlr
