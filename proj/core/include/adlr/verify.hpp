// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// The 64-bit gradient verification suite behind `--verify-gradients`:
// central finite differences (h = 1e-5) against backward() for every
// differentiable primitive, the LSTM cell, and a composed 6-token decoder
// graph.

#pragma once

#include <string>
#include <vector>

namespace adlr {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<GradCheckEntry> verify_gradients();

bool all_passed(const std::vector<GradCheckEntry>& entries);

}  // namespace adlr
