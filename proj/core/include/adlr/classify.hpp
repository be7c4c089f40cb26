// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-level activity classifiers: GPTAR (frozen GPT embedding -> bi-LSTM
// -> softmax), the trainable-embedding bi-LSTM baseline, and the
// extended-context input variants (two preceding activities, optionally
// delimited by a reserved <SEP> token).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adlr/gpt.hpp"
#include "adlr/nn.hpp"
#include "adlr/tokenize.hpp"

namespace adlr {

enum class ClassifierVariant { GptAr, BaselineBiLstm };
enum class ContextMode { Single, Extended, ExtendedSep };

struct ClassifierConfig {
  ClassifierVariant variant = ClassifierVariant::GptAr;
  ContextMode context_mode = ContextMode::Single;
  int lstm_hidden = 64;
  int n_classes = 0;
  // Inputs longer than this keep their most recent tokens.
  int max_seq_len = 512;
  // Width of the trainable lookup table for the baseline variant.
  int baseline_embed_dim = 64;

  void validate() const;
  bool operator==(const ClassifierConfig&) const = default;
};

// Training knobs shared by the single-level and hierarchical trainers.
struct TrainSettings {
  double lr = 2e-3;
  int batch_size = 16;
  int max_epochs = 40;
  int patience = 6;
  double val_week_fraction = 0.2;
  // Early stopping watches validation macro-F1 by default; set to stop on
  // validation loss instead.
  bool stop_on_loss = false;
  bool operator==(const TrainSettings&) const = default;
};

// Memoized frozen-GPT sequence embedding. The wrapped model must outlive the
// embedder. Not safe for concurrent use; give each training cell its own.
class FrozenEmbedder {
 public:
  explicit FrozenEmbedder(const GptModel<float>* model) : model_(model) {}

  const FloatMatrix& operator()(const std::vector<int>& token_ids) const;
  int dim() const { return model_->config().d_model; }

 private:
  const GptModel<float>* model_;
  mutable std::map<std::vector<int>, FloatMatrix> cache_;
};

class ClassifierModel {
 public:
  ClassifierModel() = default;

  // sensor_input_dim is the frozen embedding width for GPTAR and is ignored
  // for the baseline (which embeds with its own table).
  ClassifierModel(ClassifierConfig cfg, int sensor_input_dim,
                  LabelRegistry labels, Rng& rng);

  // Logits [1, n_classes]. Trailing padding is stripped before embedding, so
  // predictions are pad-invariant; inputs longer than max_seq_len keep the
  // most recent tokens. `embedder` is required for the GPTAR variant.
  Tensor<float> forward_logits(const TokenizedSequence& seq,
                               const FrozenEmbedder* embedder) const;

  // Softmax probabilities, no gradient tracking.
  std::vector<float> predict_probs(const TokenizedSequence& seq,
                                   const FrozenEmbedder* embedder) const;
  int predict(const TokenizedSequence& seq, const FrozenEmbedder* embedder) const;

  const ClassifierConfig& config() const { return cfg_; }
  const LabelRegistry& labels() const { return labels_; }
  std::vector<Tensor<float>> parameters() const;
  std::vector<std::vector<float>> snapshot() const;
  void restore(const std::vector<std::vector<float>>& snap);

 private:
  ClassifierConfig cfg_;
  int sensor_input_dim_ = 0;
  LabelRegistry labels_;
  Tensor<float> embed_table_;  // baseline only
  LstmParams<float> fwd_, bwd_;
  Tensor<float> w_out_, b_out_;

  friend ClassifierModel classifier_from_bundle(const std::string& dir);
};

// Extended-context assembly: concatenates the encodings of s_{j-2}, s_{j-1},
// s_j (missing predecessors contribute nothing), inserting the vocabulary's
// reserved separator id between sequence encodings when with_sep is set. The
// label is s_j's. Separator positions take the hour of the preceding event.
TokenizedSequence assemble_extended(const std::vector<TokenizedSequence>& chronological,
                                    size_t j, bool with_sep, const Vocabulary& vocab);

struct FitEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;  // macro-F1, or loss when stop_on_loss
  bool is_best = false;
};

struct FitResult {
  std::vector<FitEpoch> log;
  int best_epoch = -1;
  double best_val_metric = 0.0;
  std::vector<std::string> warnings;  // e.g. classes absent from training
};

// Cross-entropy training with early stopping on the validation metric;
// restores the best checkpoint before returning. Deterministic given `seed`.
FitResult train_classifier(ClassifierModel& model,
                           const std::vector<TokenizedSequence>& train,
                           const std::vector<TokenizedSequence>& val,
                           const FrozenEmbedder* embedder,
                           const TrainSettings& settings, uint64_t seed);

std::vector<int> predict_all(const ClassifierModel& model,
                             const std::vector<TokenizedSequence>& seqs,
                             const FrozenEmbedder* embedder);

// Classifier checkpoints reuse the ModelBundle format; the manifest records
// the label registry so predictions are self-describing.
void save_classifier_bundle(const std::string& dir, const ClassifierModel& model,
                            int sensor_input_dim);
ClassifierModel classifier_from_bundle(const std::string& dir);

}  // namespace adlr
