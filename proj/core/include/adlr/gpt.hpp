// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// GPT-style causal transformer decoder: token + learned positional
// embeddings feeding pre-normalized decoder blocks (masked multi-head
// attention and a GELU feed-forward), a final layer norm, and a tied LM
// head. Pretraining minimizes next-token cross-entropy over corpus chunks
// with perplexity-based early stopping; the frozen model then serves as a
// deterministic sequence embedder for the downstream classifiers.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adlr/nn.hpp"
#include "adlr/optim.hpp"
#include "adlr/rng.hpp"
#include "adlr/tensor.hpp"
#include "adlr/tokenize.hpp"

namespace adlr {

struct GptConfig {
  int vocab_size = 0;   // total index count (pad + ranked + unk + sep)
  int d_model = 64;
  int n_heads = 8;
  int n_layers = 3;
  int context_len = 128;
  double dropout_p = 0.1;
  bool tie_lm_head = true;

  void validate() const;
  int64_t param_count() const;
  bool operator==(const GptConfig&) const = default;
};

template <typename S>
struct GptForward {
  Tensor<S> logits;  // [L, vocab_size]
  Tensor<S> hidden;  // [L, d_model], post final layer norm
  // attention[layer][head] is the [L, L] row-stochastic weight matrix;
  // populated only when requested.
  std::vector<std::vector<Tensor<S>>> attention;
};

template <typename S>
class GptModel {
 public:
  GptModel() = default;

  GptModel(GptConfig cfg, Rng& rng, bool trainable) : cfg_(cfg) {
    cfg_.validate();
    const size_t v = static_cast<size_t>(cfg_.vocab_size);
    const size_t d = static_cast<size_t>(cfg_.d_model);
    const size_t ctx = static_cast<size_t>(cfg_.context_len);
    tok_emb_ = dense_param<S>(v, d, rng, "tok_emb");
    pos_emb_ = dense_param<S>(ctx, d, rng, "pos_emb");
    blocks_.resize(cfg_.n_layers);
    for (int l = 0; l < cfg_.n_layers; ++l) {
      auto& b = blocks_[l];
      const std::string p = "block" + std::to_string(l) + ".";
      b.ln1_g = ones_param<S>(1, d, p + "ln1_g");
      b.ln1_b = zeros_param<S>(1, d, p + "ln1_b");
      b.w_qkv = dense_param<S>(d, 3 * d, rng, p + "w_qkv");
      b.b_qkv = zeros_param<S>(1, 3 * d, p + "b_qkv");
      b.w_proj = dense_param<S>(d, d, rng, p + "w_proj");
      b.b_proj = zeros_param<S>(1, d, p + "b_proj");
      b.ln2_g = ones_param<S>(1, d, p + "ln2_g");
      b.ln2_b = zeros_param<S>(1, d, p + "ln2_b");
      b.w_fc1 = dense_param<S>(d, 4 * d, rng, p + "w_fc1");
      b.b_fc1 = zeros_param<S>(1, 4 * d, p + "b_fc1");
      b.w_fc2 = dense_param<S>(4 * d, d, rng, p + "w_fc2");
      b.b_fc2 = zeros_param<S>(1, d, p + "b_fc2");
    }
    lnf_g_ = ones_param<S>(1, d, "lnf_g");
    lnf_b_ = zeros_param<S>(1, d, "lnf_b");
    if (!cfg_.tie_lm_head) lm_head_ = dense_param<S>(d, v, rng, "lm_head");
    if (!trainable) set_trainable(false);
  }

  const GptConfig& config() const { return cfg_; }

  // Next-token logits, post-norm hidden states, and (optionally) the
  // attention maps for `ids` (length <= context_len). Positions attend only
  // to themselves and earlier positions. Dropout applies only in train mode.
  GptForward<S> forward(std::span<const int> ids, bool train_mode = false,
                        Rng* dropout_rng = nullptr,
                        bool want_attention = false) const {
    const size_t len = ids.size();
    if (len == 0) throw UsageError("gpt forward: empty input");
    if (len > static_cast<size_t>(cfg_.context_len))
      throw UsageError("gpt forward: sequence length " + std::to_string(len) +
                       " exceeds context length " +
                       std::to_string(cfg_.context_len));
    if (train_mode && cfg_.dropout_p > 0 && dropout_rng == nullptr)
      throw UsageError("gpt forward: train mode requires a dropout rng");

    const size_t d = static_cast<size_t>(cfg_.d_model);
    const size_t n_heads = static_cast<size_t>(cfg_.n_heads);
    const size_t dh = d / n_heads;
    const S head_scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));
    const S neg_inf = -std::numeric_limits<S>::infinity();
    const std::vector<uint8_t> mask = causal_mask(len);

    auto drop = [&](const Tensor<S>& t) {
      return train_mode && cfg_.dropout_p > 0 ? dropout(t, cfg_.dropout_p, *dropout_rng)
                                              : t;
    };

    GptForward<S> out;
    std::vector<int> id_vec(ids.begin(), ids.end());
    Tensor<S> x = add(embedding_lookup(tok_emb_, id_vec),
                      slice(pos_emb_, 0, len, 0, d));
    x = drop(x);

    for (const auto& b : blocks_) {
      Tensor<S> normed = layer_norm(x, b.ln1_g, b.ln1_b);
      Tensor<S> qkv = add(matmul(normed, b.w_qkv), b.b_qkv);
      std::vector<Tensor<S>> head_outs;
      head_outs.reserve(n_heads);
      std::vector<Tensor<S>> head_maps;
      for (size_t h = 0; h < n_heads; ++h) {
        Tensor<S> q = slice(qkv, 0, len, h * dh, (h + 1) * dh);
        Tensor<S> k = slice(qkv, 0, len, d + h * dh, d + (h + 1) * dh);
        Tensor<S> v = slice(qkv, 0, len, 2 * d + h * dh, 2 * d + (h + 1) * dh);
        Tensor<S> scores = scale(matmul(q, transpose(k)), head_scale);
        Tensor<S> weights = softmax(masked_fill(scores, mask, neg_inf));
        if (want_attention) head_maps.push_back(weights);
        head_outs.push_back(matmul(drop(weights), v));
      }
      if (want_attention) out.attention.push_back(std::move(head_maps));
      Tensor<S> attn = drop(add(matmul(concat_cols(head_outs), b.w_proj), b.b_proj));
      x = add(x, attn);
      Tensor<S> ff = layer_norm(x, b.ln2_g, b.ln2_b);
      ff = gelu(add(matmul(ff, b.w_fc1), b.b_fc1));
      ff = drop(add(matmul(ff, b.w_fc2), b.b_fc2));
      x = add(x, ff);
    }

    out.hidden = layer_norm(x, lnf_g_, lnf_b_);
    out.logits = cfg_.tie_lm_head ? matmul(out.hidden, transpose(tok_emb_))
                                  : matmul(out.hidden, lm_head_);
    return out;
  }

  // Parameters in a fixed, bundle-stable order.
  std::vector<Tensor<S>> parameters() const {
    std::vector<Tensor<S>> out{tok_emb_, pos_emb_};
    for (const auto& b : blocks_) {
      for (const auto& t : {b.ln1_g, b.ln1_b, b.w_qkv, b.b_qkv, b.w_proj,
                            b.b_proj, b.ln2_g, b.ln2_b, b.w_fc1, b.b_fc1,
                            b.w_fc2, b.b_fc2})
        out.push_back(t);
    }
    out.push_back(lnf_g_);
    out.push_back(lnf_b_);
    if (!cfg_.tie_lm_head) out.push_back(lm_head_);
    return out;
  }

  std::vector<std::vector<S>> snapshot() const {
    std::vector<std::vector<S>> snap;
    for (const auto& p : parameters())
      snap.emplace_back(p.data().begin(), p.data().end());
    return snap;
  }

  void restore(const std::vector<std::vector<S>>& snap) {
    auto params = parameters();
    if (snap.size() != params.size())
      throw DataError("gpt restore: parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
      auto dst = params[i].mutable_data();
      std::copy(snap[i].begin(), snap[i].end(), dst.begin());
    }
  }

  void set_trainable(bool trainable) {
    for (auto& p : parameters()) p.node()->requires_grad = trainable;
  }

  Tensor<S>& token_embedding() { return tok_emb_; }

 private:
  struct Block {
    Tensor<S> ln1_g, ln1_b, w_qkv, b_qkv, w_proj, b_proj;
    Tensor<S> ln2_g, ln2_b, w_fc1, b_fc1, w_fc2, b_fc2;
  };

  GptConfig cfg_;
  Tensor<S> tok_emb_;  // [vocab, d]
  Tensor<S> pos_emb_;  // [context_len, d]
  std::vector<Block> blocks_;
  Tensor<S> lnf_g_, lnf_b_;
  Tensor<S> lm_head_;  // only when untied
};

// Consecutive non-overlapping context_len windows; a final partial chunk is
// kept iff it holds at least 2 tokens. Throws UsageError for streams
// shorter than 2 tokens.
std::vector<std::vector<int>> chunk_corpus(const std::vector<int>& stream,
                                           int context_len);

struct PretrainSettings {
  double lr = 1e-3;
  int batch_chunks = 8;
  int max_epochs = 50;
  int patience = 5;
  double val_fraction = 0.2;  // chronological tail of the stream
  uint64_t seed = 0;
  bool operator==(const PretrainSettings&) const = default;
};

struct PretrainEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double val_perplexity = 0.0;
  bool is_best = false;
};

struct PretrainResult {
  std::vector<PretrainEpoch> log;
  int best_epoch = -1;
  double best_val_perplexity = 0.0;
};

// Trains a fresh model on the stream (training split only); returns the
// best-validation checkpoint. Throws DivergenceError (naming epoch and
// step) if the loss goes non-finite.
std::pair<GptModel<float>, PretrainResult> pretrain(const std::vector<int>& stream,
                                                    const GptConfig& cfg,
                                                    const PretrainSettings& settings);

// exp(mean next-token cross-entropy) over all predictable positions of the
// stream, chunked like training. Stream must hold at least 2 tokens.
double perplexity(const GptModel<float>& model, const std::vector<int>& stream);

struct FloatMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<float> data;  // row-major
  float at(size_t r, size_t c) const { return data[r * cols + c]; }
};

// Frozen deterministic embedding: post-final-norm hidden states, one row per
// token. Sequences longer than the context are processed in consecutive
// windows and concatenated. Throws UsageError on empty input.
FloatMatrix embed(const GptModel<float>& model, std::span<const int> ids);

struct AttentionRecord {
  std::vector<std::string> tokens;
  int n_layers = 0;
  int n_heads = 0;
  std::optional<int> target;  // when set, row-filtered export
  // weights[layer][head]: the full [L*L] matrix row-major, or the length-L
  // row leading to `target` when filtered.
  std::vector<std::vector<std::vector<float>>> weights;
};

AttentionRecord attention_export(const GptModel<float>& model,
                                 std::span<const int> ids, const Vocabulary& vocab,
                                 std::optional<int> target);
void save_attention(const std::string& path, const AttentionRecord& record);
AttentionRecord load_attention(const std::string& path);

// GPT bundles carry the model config and the vocabulary that indexes its
// embedding rows.
void save_gpt_bundle(const std::string& dir, const GptModel<float>& model,
                     const Vocabulary& vocab);
std::pair<GptModel<float>, Vocabulary> load_gpt_bundle(const std::string& dir,
                                                       bool trainable = false);

std::string gpt_config_json(const GptConfig& cfg);
GptConfig gpt_config_from_json(const std::string& text);

}  // namespace adlr
