// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: dataset preparation (split, vocabulary, label
// registry, per-week tokenized views), the six-variant ablation matrix over
// seeds with per-cell reports and a roll-up summary, and the GPT
// hyperparameter grid search via 3-fold cross-validation.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adlr/classify.hpp"
#include "adlr/config.hpp"
#include "adlr/hier.hpp"
#include "adlr/ingest.hpp"
#include "adlr/metrics.hpp"

namespace adlr {

enum class Variant {
  GptAr,
  BaselineBiLstm,
  GptArExtended,
  GptArExtendedSep,
  GptHarNote,
  GptHar,
};

std::string variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
std::vector<Variant> parse_variant_list(std::string_view csv);  // UsageError on unknown

// A dataset materialized for one split configuration. Tokenized sequences
// are grouped by week bucket; context assembly (hierarchical slots and
// extended inputs) never crosses bucket boundaries, which keeps excluded
// weeks out of every context.
struct PreparedDataset {
  std::string path;
  DatasetSplit split;
  Vocabulary vocab;       // built from the training split only
  LabelRegistry labels;   // over the whole dataset
  std::vector<std::vector<TokenizedSequence>> train_buckets;
  std::vector<std::vector<TokenizedSequence>> val_buckets;  // classifier earmark
  std::vector<std::vector<TokenizedSequence>> test_buckets;
  std::vector<int> pretrain_stream;  // full training split, chronological
  std::string split_id;
};

PreparedDataset prepare_dataset(const std::vector<ActivitySequence>& sequences,
                                const SplitSettings& split_settings,
                                double val_week_fraction, std::string path = {});

// Flattened per-variant sample views over bucket groups.
std::vector<TokenizedSequence> flatten_single(
    const std::vector<std::vector<TokenizedSequence>>& buckets);
std::vector<TokenizedSequence> flatten_extended(
    const std::vector<std::vector<TokenizedSequence>>& buckets, bool with_sep,
    const Vocabulary& vocab);
std::vector<HierContext> flatten_contexts(
    const std::vector<std::vector<TokenizedSequence>>& buckets);

// A trained single cell; exactly one of classifier/hier is engaged.
struct VariantModel {
  Variant variant = Variant::GptAr;
  std::optional<ClassifierModel> classifier;
  std::optional<HierModel> hier;
  FitResult fit;
};

// Trains one variant. frozen_gpt may be null only for the baseline variant.
VariantModel train_variant(const PreparedDataset& ds,
                           const GptModel<float>* frozen_gpt, Variant variant,
                           uint64_t seed, const RunConfig& cfg);

// Evaluates a trained variant on the test buckets; fills config hash and
// split id into run_meta (seed and wall time are the caller's).
EvalReport evaluate_on_test(const PreparedDataset& ds,
                            const GptModel<float>* frozen_gpt,
                            const VariantModel& model, const RunConfig& cfg);

// Bundle round trip for trained variants (dispatches on model type).
void save_variant_bundle(const std::string& dir, const VariantModel& model,
                         int sensor_input_dim);
VariantModel load_variant_bundle(const std::string& dir);

// Trains one (variant, seed) cell against a prepared dataset and a frozen
// GPT bundle, evaluating on the test buckets.
EvalReport run_cell(const PreparedDataset& ds, const GptModel<float>& frozen_gpt,
                    Variant variant, uint64_t seed, const RunConfig& cfg);

struct ExperimentPlan {
  std::vector<Variant> variants;
  std::vector<std::string> dataset_paths;  // segmented dataset files
  RunConfig config;                        // seeds come from config.seeds
  std::string gpt_bundle_dir;  // reuse an existing bundle when non-empty
  bool allow_pretrain = true;  // pretrain per dataset when no bundle is given
  int jobs = 1;

  void validate() const;
};

struct CellResult {
  Variant variant;
  std::string dataset;
  uint64_t seed = 0;
  EvalReport report;
  std::string report_path;
};

struct SummaryRow {
  std::string variant;
  std::string dataset;
  int n_seeds = 0;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;  // sample standard deviation (n-1); 0 for n=1
  double mean_balanced_accuracy = 0.0;
  double std_balanced_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double mean_weighted_f1 = 0.0;
};

// Runs every (variant, dataset, seed) cell, writing one report JSON and one
// confusion CSV per cell plus `summary.csv` under out_dir. Independent cells
// may run on plan.jobs threads.
std::vector<CellResult> run_experiment(const ExperimentPlan& plan,
                                       const std::string& out_dir);

std::vector<SummaryRow> summarize(const std::vector<CellResult>& cells);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

void write_report_json(const std::string& path, const EvalReport& report,
                       const std::string& variant, const std::string& dataset);
void write_confusion_csv(const std::string& path, const EvalReport& report);

// ------------------------------------------------------ hyperparameter search

struct GridPoint {
  int n_heads = 8;
  int n_layers = 3;
};

struct SearchRow {
  GridPoint point;
  std::string dataset;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;  // across folds
};

struct SearchResult {
  GridPoint best;
  std::vector<SearchRow> table;
};

// 3-fold cross-validated GPTAR score per grid point; selects the highest
// mean macro-F1 averaged across datasets, breaking ties toward fewer
// parameters and then grid order. Writes `search.csv` and `best.json`.
SearchResult hyperparam_search(const std::vector<GridPoint>& grid,
                               const ExperimentPlan& plan, int k,
                               const std::string& out_dir);

}  // namespace adlr
