// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical classifier over c=3 consecutive activity sequences. Each slot
// runs a low-level module: a bi-LSTM over frozen GPT sensor embeddings,
// optionally concatenated with a bi-LSTM over hour-of-day embeddings (the
// time branch). The three slot vectors feed a top-level bi-LSTM and softmax
// head. With the time branch enabled this is GPTHAR; disabled, GPTHAR-note.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adlr/classify.hpp"

namespace adlr {

struct TimeBranchConfig {
  bool enabled = true;
  int hour_embed_dim = 8;
  int hour_lstm_hidden = 16;
  bool operator==(const TimeBranchConfig&) const = default;
};

struct HierConfig {
  int n_classes = 0;
  int lstm_hidden = 64;  // sensor branch
  int top_hidden = 64;
  int max_seq_len = 512;
  // The three low-level modules share weights by default; untied copies are
  // available for comparison.
  bool share_low_level = true;
  TimeBranchConfig time;

  void validate() const;
  int slot_dim() const {
    return 2 * lstm_hidden + (time.enabled ? 2 * time.hour_lstm_hidden : 0);
  }
  bool operator==(const HierConfig&) const = default;
};

// Chronologically ordered context (s_{j-2}, s_{j-1}, s_j); the last slot is
// always present and carries the target label.
struct HierContext {
  std::array<std::optional<TokenizedSequence>, 3> slots;
  int target_label_id = -1;
};

// One context per input index; predecessor slots are empty at the boundary.
std::vector<HierContext> build_contexts(
    const std::vector<TokenizedSequence>& chronological);

class HierModel {
 public:
  HierModel() = default;
  HierModel(HierConfig cfg, int sensor_input_dim, LabelRegistry labels, Rng& rng);

  // Slot representation [1, slot_dim()]; an absent (or all-padding) slot
  // yields the zero vector. slot_index selects the low-level module when
  // weights are untied.
  Tensor<float> low_level_forward(const std::optional<TokenizedSequence>& slot,
                                  const FrozenEmbedder& embedder,
                                  int slot_index) const;

  Tensor<float> forward_logits(const HierContext& ctx,
                               const FrozenEmbedder& embedder) const;
  std::vector<float> predict_probs(const HierContext& ctx,
                                   const FrozenEmbedder& embedder) const;
  int predict(const HierContext& ctx, const FrozenEmbedder& embedder) const;

  const HierConfig& config() const { return cfg_; }
  const LabelRegistry& labels() const { return labels_; }
  std::vector<Tensor<float>> parameters() const;
  std::vector<std::vector<float>> snapshot() const;
  void restore(const std::vector<std::vector<float>>& snap);

 private:
  struct LowLevel {
    LstmParams<float> sensor_fwd, sensor_bwd;
    Tensor<float> hour_emb;  // [25, hour_embed_dim]: pad row + 24 hours
    LstmParams<float> hour_fwd, hour_bwd;
  };

  const LowLevel& low(int slot_index) const {
    return low_[cfg_.share_low_level ? 0 : slot_index];
  }

  HierConfig cfg_;
  int sensor_input_dim_ = 0;
  LabelRegistry labels_;
  std::vector<LowLevel> low_;  // 1 entry when shared, 3 when untied
  LstmParams<float> top_fwd_, top_bwd_;
  Tensor<float> w_out_, b_out_;

  friend HierModel hier_from_bundle(const std::string& dir);
};

FitResult train_hier(HierModel& model, const std::vector<HierContext>& train,
                     const std::vector<HierContext>& val,
                     const FrozenEmbedder& embedder, const TrainSettings& settings,
                     uint64_t seed);

std::vector<int> predict_all(const HierModel& model,
                             const std::vector<HierContext>& contexts,
                             const FrozenEmbedder& embedder);

void save_hier_bundle(const std::string& dir, const HierModel& model,
                      int sensor_input_dim);
HierModel hier_from_bundle(const std::string& dir);

}  // namespace adlr
