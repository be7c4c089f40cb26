// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/hier.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

#include "adlr/bundle.hpp"
#include "adlr/metrics.hpp"
#include "serde.hpp"

namespace adlr {

void HierConfig::validate() const {
  if (n_classes < 2) throw UsageError("hier config: n_classes must be >= 2");
  if (lstm_hidden <= 0 || top_hidden <= 0 || max_seq_len <= 0)
    throw UsageError("hier config: dimensions must be positive");
  if (time.enabled && (time.hour_embed_dim <= 0 || time.hour_lstm_hidden <= 0))
    throw UsageError("hier config: time branch dimensions must be positive");
}

std::vector<HierContext> build_contexts(
    const std::vector<TokenizedSequence>& chronological) {
  std::vector<HierContext> contexts;
  contexts.reserve(chronological.size());
  for (size_t j = 0; j < chronological.size(); ++j) {
    HierContext ctx;
    if (j >= 2) ctx.slots[0] = chronological[j - 2];
    if (j >= 1) ctx.slots[1] = chronological[j - 1];
    ctx.slots[2] = chronological[j];
    ctx.target_label_id = chronological[j].label_id;
    contexts.push_back(std::move(ctx));
  }
  return contexts;
}

namespace {

// Trimmed (token_ids, hour_ids) or nullopt when the slot is absent or holds
// only padding. Padding-only slots collapse to the same zero vector as
// absent ones.
std::optional<std::pair<std::vector<int>, std::vector<int>>> trim_slot(
    const std::optional<TokenizedSequence>& slot, int max_seq_len) {
  if (!slot) return std::nullopt;
  size_t end = slot->token_ids.size();
  while (end > 0 && slot->token_ids[end - 1] == Vocabulary::kPadIndex) --end;
  if (end == 0) return std::nullopt;
  const size_t start =
      end > static_cast<size_t>(max_seq_len) ? end - max_seq_len : 0;
  return std::make_pair(
      std::vector<int>(slot->token_ids.begin() + start, slot->token_ids.begin() + end),
      std::vector<int>(slot->hour_ids.begin() + start, slot->hour_ids.begin() + end));
}

}  // namespace

HierModel::HierModel(HierConfig cfg, int sensor_input_dim, LabelRegistry labels,
                     Rng& rng)
    : cfg_(cfg), sensor_input_dim_(sensor_input_dim), labels_(std::move(labels)) {
  cfg_.validate();
  if (cfg_.n_classes != labels_.size())
    throw UsageError("hier: n_classes does not match label registry");
  const int n_modules = cfg_.share_low_level ? 1 : 3;
  low_.reserve(n_modules);
  for (int m = 0; m < n_modules; ++m) {
    const std::string p = "low" + std::to_string(m) + ".";
    LowLevel ll;
    ll.sensor_fwd = LstmParams<float>::init(sensor_input_dim_, cfg_.lstm_hidden,
                                            rng, p + "sensor_fwd");
    ll.sensor_bwd = LstmParams<float>::init(sensor_input_dim_, cfg_.lstm_hidden,
                                            rng, p + "sensor_bwd");
    if (cfg_.time.enabled) {
      ll.hour_emb = dense_param<float>(25, cfg_.time.hour_embed_dim, rng,
                                       p + "hour_emb");
      ll.hour_fwd = LstmParams<float>::init(cfg_.time.hour_embed_dim,
                                            cfg_.time.hour_lstm_hidden, rng,
                                            p + "hour_fwd");
      ll.hour_bwd = LstmParams<float>::init(cfg_.time.hour_embed_dim,
                                            cfg_.time.hour_lstm_hidden, rng,
                                            p + "hour_bwd");
    }
    low_.push_back(std::move(ll));
  }
  top_fwd_ = LstmParams<float>::init(cfg_.slot_dim(), cfg_.top_hidden, rng,
                                     "top_fwd");
  top_bwd_ = LstmParams<float>::init(cfg_.slot_dim(), cfg_.top_hidden, rng,
                                     "top_bwd");
  w_out_ = dense_param<float>(2 * cfg_.top_hidden, cfg_.n_classes, rng, "w_out");
  b_out_ = zeros_param<float>(1, cfg_.n_classes, "b_out");
}

Tensor<float> HierModel::low_level_forward(const std::optional<TokenizedSequence>& slot,
                                           const FrozenEmbedder& embedder,
                                           int slot_index) const {
  auto trimmed = trim_slot(slot, cfg_.max_seq_len);
  if (!trimmed)
    return Tensor<float>::zeros({1, static_cast<size_t>(cfg_.slot_dim())});
  const auto& [token_ids, hour_ids] = *trimmed;
  const LowLevel& module = low(slot_index);

  const FloatMatrix& e = embedder(token_ids);
  Tensor<float> sensor_in = constant<float>({e.rows, e.cols}, std::vector<float>(e.data));
  Tensor<float> out = bilstm_readout(sensor_in, module.sensor_fwd, module.sensor_bwd);
  if (cfg_.time.enabled) {
    std::vector<int> shifted(hour_ids.size());
    for (size_t i = 0; i < hour_ids.size(); ++i) shifted[i] = hour_ids[i] + 1;
    Tensor<float> hour_in = embedding_lookup(module.hour_emb, shifted);
    Tensor<float> time_out =
        bilstm_readout(hour_in, module.hour_fwd, module.hour_bwd);
    out = concat_cols<float>({out, time_out});
  }
  return out;
}

Tensor<float> HierModel::forward_logits(const HierContext& ctx,
                                        const FrozenEmbedder& embedder) const {
  if (!ctx.slots[2]) throw UsageError("hier forward: last slot must be present");
  std::vector<Tensor<float>> slot_vectors;
  slot_vectors.reserve(3);
  for (int s = 0; s < 3; ++s)
    slot_vectors.push_back(low_level_forward(ctx.slots[s], embedder, s));
  Tensor<float> sequence = concat_rows(slot_vectors);  // [3, slot_dim]
  Tensor<float> readout = bilstm_readout(sequence, top_fwd_, top_bwd_);
  return add(matmul(readout, w_out_), b_out_);
}

std::vector<float> HierModel::predict_probs(const HierContext& ctx,
                                            const FrozenEmbedder& embedder) const {
  NoGradGuard ng;
  Tensor<float> probs = softmax(forward_logits(ctx, embedder));
  return std::vector<float>(probs.data().begin(), probs.data().end());
}

int HierModel::predict(const HierContext& ctx, const FrozenEmbedder& embedder) const {
  auto probs = predict_probs(ctx, embedder);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

std::vector<Tensor<float>> HierModel::parameters() const {
  std::vector<Tensor<float>> out;
  for (const auto& ll : low_) {
    for (const auto& p : ll.sensor_fwd.params()) out.push_back(p);
    for (const auto& p : ll.sensor_bwd.params()) out.push_back(p);
    if (cfg_.time.enabled) {
      out.push_back(ll.hour_emb);
      for (const auto& p : ll.hour_fwd.params()) out.push_back(p);
      for (const auto& p : ll.hour_bwd.params()) out.push_back(p);
    }
  }
  for (const auto& p : top_fwd_.params()) out.push_back(p);
  for (const auto& p : top_bwd_.params()) out.push_back(p);
  out.push_back(w_out_);
  out.push_back(b_out_);
  return out;
}

std::vector<std::vector<float>> HierModel::snapshot() const {
  std::vector<std::vector<float>> snap;
  for (const auto& p : parameters())
    snap.emplace_back(p.data().begin(), p.data().end());
  return snap;
}

void HierModel::restore(const std::vector<std::vector<float>>& snap) {
  auto params = parameters();
  if (snap.size() != params.size())
    throw DataError("hier restore: parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].mutable_data();
    std::copy(snap[i].begin(), snap[i].end(), dst.begin());
  }
}

FitResult train_hier(HierModel& model, const std::vector<HierContext>& train,
                     const std::vector<HierContext>& val,
                     const FrozenEmbedder& embedder, const TrainSettings& settings,
                     uint64_t seed) {
  if (train.empty() || val.empty())
    throw DataError("train_hier: empty train or validation set");
  std::vector<int> train_labels, val_labels;
  for (const auto& c : train) train_labels.push_back(c.target_label_id);
  for (const auto& c : val) val_labels.push_back(c.target_label_id);

  Adam<float> opt(model.parameters(), AdamConfig{.lr = settings.lr});
  Rng rng(seed);

  FitResult result;
  auto best = model.snapshot();
  int epochs_since_best = 0;
  const bool maximize = !settings.stop_on_loss;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < settings.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t steps = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(settings.batch_size)) {
      const size_t stop =
          std::min(order.size(), start + static_cast<size_t>(settings.batch_size));
      const float inv_batch = 1.0f / static_cast<float>(stop - start);
      double batch_loss = 0.0;
      for (size_t i = start; i < stop; ++i) {
        Tensor<float> logits = model.forward_logits(train[order[i]], embedder);
        Tensor<float> loss =
            cross_entropy(logits, std::vector<int>{train_labels[order[i]]});
        batch_loss += loss.item();
        scale(loss, inv_batch).backward();
      }
      if (!std::isfinite(batch_loss))
        throw DivergenceError("hier training diverged at epoch " +
                              std::to_string(epoch) + ", step " +
                              std::to_string(steps));
      opt.step();
      epoch_loss += batch_loss * inv_batch;
      ++steps;
    }

    double val_metric;
    if (settings.stop_on_loss) {
      NoGradGuard ng;
      double total = 0.0;
      for (size_t i = 0; i < val.size(); ++i)
        total += cross_entropy(model.forward_logits(val[i], embedder),
                               std::vector<int>{val_labels[i]})
                     .item();
      val_metric = total / static_cast<double>(val.size());
    } else {
      std::vector<int> preds = predict_all(model, val, embedder);
      val_metric = macro_f1_of(val_labels, preds, model.config().n_classes);
    }

    const bool improved =
        result.best_epoch < 0 ||
        (maximize ? val_metric > result.best_val_metric
                  : val_metric < result.best_val_metric);
    FitEpoch entry{epoch, epoch_loss / static_cast<double>(steps), val_metric,
                   improved};
    if (improved) {
      result.best_epoch = epoch;
      result.best_val_metric = val_metric;
      best = model.snapshot();
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    result.log.push_back(entry);
    if (epochs_since_best >= settings.patience) break;
  }

  model.restore(best);

  std::set<int> seen(train_labels.begin(), train_labels.end());
  for (int c = 0; c < model.labels().size(); ++c)
    if (!seen.contains(c))
      result.warnings.push_back("class '" + model.labels().name_of(c) +
                                "' absent from training data");
  return result;
}

std::vector<int> predict_all(const HierModel& model,
                             const std::vector<HierContext>& contexts,
                             const FrozenEmbedder& embedder) {
  std::vector<int> preds;
  preds.reserve(contexts.size());
  for (const auto& c : contexts) preds.push_back(model.predict(c, embedder));
  return preds;
}

void save_hier_bundle(const std::string& dir, const HierModel& model,
                      int sensor_input_dim) {
  nlohmann::json cfg;
  cfg["hier"] = model.config();
  cfg["labels"] = model.labels().names();
  cfg["sensor_input_dim"] = sensor_input_dim;
  std::vector<BundleParamView> views;
  for (const auto& p : model.parameters())
    views.push_back({p.name(), p.shape(), p.data()});
  save_bundle(dir, "hier", cfg.dump(), views);
}

HierModel hier_from_bundle(const std::string& dir) {
  LoadedBundle bundle = load_bundle(dir);
  if (bundle.model_type != "hier")
    throw DataError("expected a hier bundle in " + dir + ", found '" +
                    bundle.model_type + "'");
  nlohmann::json cfg = nlohmann::json::parse(bundle.config_json);
  HierConfig hcfg = cfg.at("hier").get<HierConfig>();
  LabelRegistry labels(cfg.at("labels").get<std::vector<std::string>>());
  Rng rng(0);
  HierModel model(hcfg, cfg.at("sensor_input_dim").get<int>(), labels, rng);
  std::vector<std::vector<float>> values;
  for (auto& p : bundle.params) values.push_back(std::move(p.data));
  model.restore(values);
  return model;
}

}  // namespace adlr
