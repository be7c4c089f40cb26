// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics: per-class precision/recall/F1 (0/0 defined as 0),
// macro averages over every registry class, support-weighted averages,
// balanced accuracy, and the confusion matrix (rows = true, columns =
// predicted).

#pragma once

#include <cstdint>

#include "adlr/errors.hpp"
#include <span>
#include <string>
#include <vector>

namespace adlr {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;
};

struct RunMeta {
  uint64_t seed = 0;
  std::string config_hash;
  std::string split_id;
  double wall_time_sec = 0.0;
};

struct EvalReport {
  std::vector<std::string> labels;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  // Mean per-class recall over classes with nonzero support.
  double balanced_accuracy = 0.0;
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  std::vector<std::vector<int64_t>> confusion;
  RunMeta run_meta;
};

// Computes the report from aligned label vectors. Macro averages run over
// every class in `labels`, including zero-support ones (which contribute 0).
EvalReport metrics(std::span<const int> true_ids, std::span<const int> pred_ids,
                   const std::vector<std::string>& labels);

// Convenience for early stopping: macro-F1 without building the full report.
double macro_f1_of(std::span<const int> true_ids, std::span<const int> pred_ids,
                   int n_classes);

}  // namespace adlr
