// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/metrics.hpp"

#include "adlr/errors.hpp"

namespace adlr {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

EvalReport metrics(std::span<const int> true_ids, std::span<const int> pred_ids,
                   const std::vector<std::string>& labels) {
  if (true_ids.size() != pred_ids.size())
    throw UsageError("metrics: " + std::to_string(true_ids.size()) +
                     " true labels vs " + std::to_string(pred_ids.size()) +
                     " predictions");
  if (true_ids.empty()) throw UsageError("metrics: empty label vectors");
  const int n = static_cast<int>(labels.size());

  EvalReport report;
  report.labels = labels;
  report.confusion.assign(n, std::vector<int64_t>(n, 0));
  for (size_t i = 0; i < true_ids.size(); ++i) {
    const int t = true_ids[i], p = pred_ids[i];
    if (t < 0 || t >= n || p < 0 || p >= n)
      throw UsageError("metrics: label id out of range for " +
                       std::to_string(n) + " classes");
    ++report.confusion[t][p];
  }

  const double total = static_cast<double>(true_ids.size());
  int64_t diag = 0;
  double recall_sum_present = 0.0;
  int present = 0;

  report.per_class.resize(n);
  for (int c = 0; c < n; ++c) {
    int64_t tp = report.confusion[c][c];
    int64_t support = 0, predicted = 0;
    for (int j = 0; j < n; ++j) {
      support += report.confusion[c][j];
      predicted += report.confusion[j][c];
    }
    diag += tp;
    ClassMetrics& m = report.per_class[c];
    m.support = support;
    m.precision = safe_div(static_cast<double>(tp), static_cast<double>(predicted));
    m.recall = safe_div(static_cast<double>(tp), static_cast<double>(support));
    m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);

    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
    report.weighted_precision += m.precision * static_cast<double>(support);
    report.weighted_recall += m.recall * static_cast<double>(support);
    report.weighted_f1 += m.f1 * static_cast<double>(support);
    if (support > 0) {
      recall_sum_present += m.recall;
      ++present;
    }
  }

  report.macro_precision /= n;
  report.macro_recall /= n;
  report.macro_f1 /= n;
  report.weighted_precision /= total;
  report.weighted_recall /= total;
  report.weighted_f1 /= total;
  report.accuracy = static_cast<double>(diag) / total;
  report.balanced_accuracy = present > 0 ? recall_sum_present / present : 0.0;
  return report;
}

double macro_f1_of(std::span<const int> true_ids, std::span<const int> pred_ids,
                   int n_classes) {
  std::vector<std::string> labels(n_classes);
  return metrics(true_ids, pred_ids, labels).macro_f1;
}

}  // namespace adlr
