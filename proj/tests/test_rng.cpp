// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <adlr/rng.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

using namespace adlr;

TEST_CASE("identical seeds produce identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge within the first ten draws") {
  for (uint64_t s = 0; s < 50; ++s) {
    Rng a(s), b(s + 1);
    bool differ = false;
    for (int i = 0; i < 10 && !differ; ++i) differ = a.next_u64() != b.next_u64();
    CHECK(differ);
  }
}

TEST_CASE("uniform stays in the half-open unit interval") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal sample mean is within five standard errors") {
  Rng rng(123);
  const int n = 100000;
  const double stddev = 0.02;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal(0.0, stddev);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 5.0 * stddev / std::sqrt(static_cast<double>(n)));
  const double variance = sum_sq / n - mean * mean;
  CHECK(variance == doctest::Approx(stddev * stddev).epsilon(0.05));
}

TEST_CASE("bounded draws cover the range without escaping it") {
  Rng rng(9);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) ++counts.at(rng.bounded(5));
  for (int c : counts) CHECK(c > 800);  // roughly uniform
}

TEST_CASE("xavier uniform respects the fan-in/fan-out limit") {
  Rng rng(4);
  auto values = init_xavier_uniform(16, 32, rng);
  const double limit = std::sqrt(6.0 / (16.0 + 32.0));
  CHECK(values.size() == 16 * 32);
  for (double v : values) {
    CHECK(v >= -limit);
    CHECK(v <= limit);
  }
}

TEST_CASE("shuffle is the documented Fisher-Yates walk") {
  // Reference implementation: for i = n-1 .. 1, j = bounded(i+1), swap.
  auto reference = [](std::vector<int> v, uint64_t seed) {
    Rng rng(seed);
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(rng.bounded(i + 1));
      std::swap(v[i], v[j]);
    }
    return v;
  };
  std::vector<int> base{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  for (uint64_t seed : {0ull, 1ull, 17ull}) {
    std::vector<int> shuffled = base;
    Rng rng(seed);
    rng.shuffle(shuffled);
    CHECK(shuffled == reference(base, seed));
  }
  // Seeds 0 and 1 give different permutations of ten elements.
  std::vector<int> s0 = base, s1 = base;
  Rng r0(0), r1(1);
  r0.shuffle(s0);
  r1.shuffle(s1);
  CHECK(s0 != s1);
}
