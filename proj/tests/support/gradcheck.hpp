// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient verification in double precision. The
// oracle is independent of the autodiff path: it re-evaluates the forward
// function at perturbed inputs and compares the quotient against the
// gradients produced by backward().

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <adlr/rng.hpp>
#include <adlr/tensor.hpp>

namespace adlr::test {

using DTensor = adlr::Tensor<double>;
using ScalarFn = std::function<DTensor(const std::vector<DTensor>&)>;

// Maximum elementwise relative error between analytic and numeric gradients,
// with denominator max(1, |analytic|, |numeric|) so near-zero gradients are
// compared absolutely.
inline double grad_check(const ScalarFn& f, std::vector<DTensor> leaves,
                         double h = 1e-5) {
  for (auto& l : leaves) l.zero_grad();
  f(leaves).backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& l : leaves)
    analytic.emplace_back(l.grad().begin(), l.grad().end());

  double max_err = 0.0;
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
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

inline DTensor random_leaf(adlr::Shape shape, adlr::Rng& rng, double lo = -1.0,
                           double hi = 1.0) {
  std::vector<double> data(adlr::shape_size(shape));
  for (auto& v : data) v = rng.uniform(lo, hi);
  return DTensor::from(std::move(shape), std::move(data), /*requires_grad=*/true);
}

}  // namespace adlr::test
