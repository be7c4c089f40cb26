// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/classify.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

#include "adlr/bundle.hpp"
#include "adlr/metrics.hpp"
#include "serde.hpp"

namespace adlr {

void ClassifierConfig::validate() const {
  if (n_classes < 2) throw UsageError("classifier config: n_classes must be >= 2");
  if (lstm_hidden <= 0 || max_seq_len <= 0 || baseline_embed_dim <= 0)
    throw UsageError("classifier config: dimensions must be positive");
}

const FloatMatrix& FrozenEmbedder::operator()(const std::vector<int>& token_ids) const {
  auto it = cache_.find(token_ids);
  if (it == cache_.end())
    it = cache_.emplace(token_ids, embed(*model_, token_ids)).first;
  return it->second;
}

namespace {

// Most-recent-token truncation followed by trailing-pad stripping. The
// result is never empty for a sequence with at least one real token.
std::pair<std::vector<int>, std::vector<int>> trim_input(
    const TokenizedSequence& seq, int max_seq_len) {
  if (seq.token_ids.empty()) throw UsageError("classifier: empty input sequence");
  if (seq.token_ids.size() != seq.hour_ids.size())
    throw UsageError("classifier: token/hour length mismatch");
  size_t end = seq.token_ids.size();
  while (end > 0 && seq.token_ids[end - 1] == Vocabulary::kPadIndex) --end;
  if (end == 0) throw UsageError("classifier: input is all padding");
  const size_t start =
      end > static_cast<size_t>(max_seq_len) ? end - max_seq_len : 0;
  return {std::vector<int>(seq.token_ids.begin() + start, seq.token_ids.begin() + end),
          std::vector<int>(seq.hour_ids.begin() + start, seq.hour_ids.begin() + end)};
}

}  // namespace

ClassifierModel::ClassifierModel(ClassifierConfig cfg, int sensor_input_dim,
                                 LabelRegistry labels, Rng& rng)
    : cfg_(cfg), sensor_input_dim_(sensor_input_dim), labels_(std::move(labels)) {
  cfg_.validate();
  if (cfg_.n_classes != labels_.size())
    throw UsageError("classifier: n_classes does not match label registry");
  int input_dim = sensor_input_dim_;
  if (cfg_.variant == ClassifierVariant::BaselineBiLstm) {
    input_dim = cfg_.baseline_embed_dim;
    // sensor_input_dim doubles as the table height (total token indices).
    embed_table_ = dense_param<float>(sensor_input_dim_, input_dim, rng, "embed_table");
  }
  fwd_ = LstmParams<float>::init(input_dim, cfg_.lstm_hidden, rng, "lstm_fwd");
  bwd_ = LstmParams<float>::init(input_dim, cfg_.lstm_hidden, rng, "lstm_bwd");
  w_out_ = dense_param<float>(2 * cfg_.lstm_hidden, cfg_.n_classes, rng, "w_out");
  b_out_ = zeros_param<float>(1, cfg_.n_classes, "b_out");
}

Tensor<float> ClassifierModel::forward_logits(const TokenizedSequence& seq,
                                              const FrozenEmbedder* embedder) const {
  auto [token_ids, hour_ids] = trim_input(seq, cfg_.max_seq_len);
  (void)hour_ids;  // the single-level classifiers are hour-blind
  Tensor<float> inputs;
  if (cfg_.variant == ClassifierVariant::GptAr) {
    if (embedder == nullptr)
      throw UsageError("GPTAR classifier requires a frozen embedder");
    const FloatMatrix& e = (*embedder)(token_ids);
    inputs = constant<float>({e.rows, e.cols}, std::vector<float>(e.data));
  } else {
    inputs = embedding_lookup(embed_table_, token_ids);
  }
  Tensor<float> readout = bilstm_readout(inputs, fwd_, bwd_);
  return add(matmul(readout, w_out_), b_out_);
}

std::vector<float> ClassifierModel::predict_probs(const TokenizedSequence& seq,
                                                  const FrozenEmbedder* embedder) const {
  NoGradGuard ng;
  Tensor<float> probs = softmax(forward_logits(seq, embedder));
  return std::vector<float>(probs.data().begin(), probs.data().end());
}

int ClassifierModel::predict(const TokenizedSequence& seq,
                             const FrozenEmbedder* embedder) const {
  auto probs = predict_probs(seq, embedder);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

std::vector<Tensor<float>> ClassifierModel::parameters() const {
  std::vector<Tensor<float>> out;
  if (cfg_.variant == ClassifierVariant::BaselineBiLstm) out.push_back(embed_table_);
  for (const auto& p : fwd_.params()) out.push_back(p);
  for (const auto& p : bwd_.params()) out.push_back(p);
  out.push_back(w_out_);
  out.push_back(b_out_);
  return out;
}

std::vector<std::vector<float>> ClassifierModel::snapshot() const {
  std::vector<std::vector<float>> snap;
  for (const auto& p : parameters())
    snap.emplace_back(p.data().begin(), p.data().end());
  return snap;
}

void ClassifierModel::restore(const std::vector<std::vector<float>>& snap) {
  auto params = parameters();
  if (snap.size() != params.size())
    throw DataError("classifier restore: parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].mutable_data();
    std::copy(snap[i].begin(), snap[i].end(), dst.begin());
  }
}

TokenizedSequence assemble_extended(const std::vector<TokenizedSequence>& chronological,
                                    size_t j, bool with_sep, const Vocabulary& vocab) {
  if (j >= chronological.size())
    throw UsageError("assemble_extended: index out of range");
  TokenizedSequence out;
  const size_t first = j >= 2 ? j - 2 : 0;
  for (size_t i = first; i <= j; ++i) {
    const TokenizedSequence& part = chronological[i];
    if (with_sep && !out.token_ids.empty()) {
      out.token_ids.push_back(vocab.sep_index());
      out.hour_ids.push_back(out.hour_ids.back());
    }
    out.token_ids.insert(out.token_ids.end(), part.token_ids.begin(),
                         part.token_ids.end());
    out.hour_ids.insert(out.hour_ids.end(), part.hour_ids.begin(),
                        part.hour_ids.end());
  }
  out.label_id = chronological[j].label_id;
  out.source_label = chronological[j].source_label;
  return out;
}

// ------------------------------------------------------------------ training

namespace {

// Shared fitting loop for anything exposing (forward logits, snapshot,
// restore, parameters, predict) over an indexable sample list.
template <typename ForwardFn, typename PredictFn, typename SnapshotFn,
          typename RestoreFn>
FitResult fit_loop(std::vector<Tensor<float>> params, size_t n_train,
                   const std::vector<int>& train_labels,
                   const std::vector<int>& val_labels, int n_classes,
                   const TrainSettings& settings, uint64_t seed,
                   ForwardFn&& forward_logits, PredictFn&& predict_val,
                   SnapshotFn&& take_snapshot, RestoreFn&& restore_snapshot) {
  Adam<float> opt(params, AdamConfig{.lr = settings.lr});
  Rng rng(seed);

  FitResult result;
  auto best = take_snapshot();
  int epochs_since_best = 0;
  const bool maximize = !settings.stop_on_loss;

  std::vector<size_t> order(n_train);
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
        Tensor<float> logits = forward_logits(order[i]);
        Tensor<float> loss =
            cross_entropy(logits, std::vector<int>{train_labels[order[i]]});
        batch_loss += loss.item();
        scale(loss, inv_batch).backward();
      }
      if (!std::isfinite(batch_loss))
        throw DivergenceError("classifier training diverged at epoch " +
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
      for (size_t i = 0; i < val_labels.size(); ++i) {
        Tensor<float> logits = predict_val(i);
        total += cross_entropy(logits, std::vector<int>{val_labels[i]}).item();
      }
      val_metric = total / static_cast<double>(val_labels.size());
    } else {
      NoGradGuard ng;
      std::vector<int> preds(val_labels.size());
      for (size_t i = 0; i < val_labels.size(); ++i) {
        Tensor<float> logits = predict_val(i);
        auto d = logits.data();
        preds[i] = static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
      }
      val_metric = macro_f1_of(val_labels, preds, n_classes);
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
      best = take_snapshot();
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    result.log.push_back(entry);
    if (epochs_since_best >= settings.patience) break;
  }

  restore_snapshot(best);
  return result;
}

std::vector<std::string> missing_class_warnings(const std::vector<int>& train_labels,
                                                const LabelRegistry& labels) {
  std::set<int> seen(train_labels.begin(), train_labels.end());
  std::vector<std::string> warnings;
  for (int c = 0; c < labels.size(); ++c)
    if (!seen.contains(c))
      warnings.push_back("class '" + labels.name_of(c) +
                         "' absent from training data");
  return warnings;
}

}  // namespace

FitResult train_classifier(ClassifierModel& model,
                           const std::vector<TokenizedSequence>& train,
                           const std::vector<TokenizedSequence>& val,
                           const FrozenEmbedder* embedder,
                           const TrainSettings& settings, uint64_t seed) {
  if (train.empty() || val.empty())
    throw DataError("train_classifier: empty train or validation set");
  std::vector<int> train_labels, val_labels;
  for (const auto& s : train) train_labels.push_back(s.label_id);
  for (const auto& s : val) val_labels.push_back(s.label_id);

  FitResult result = fit_loop(
      model.parameters(), train.size(), train_labels, val_labels,
      model.config().n_classes, settings, seed,
      [&](size_t i) { return model.forward_logits(train[i], embedder); },
      [&](size_t i) { return model.forward_logits(val[i], embedder); },
      [&] { return model.snapshot(); },
      [&](const std::vector<std::vector<float>>& snap) { model.restore(snap); });
  result.warnings = missing_class_warnings(train_labels, model.labels());
  return result;
}

std::vector<int> predict_all(const ClassifierModel& model,
                             const std::vector<TokenizedSequence>& seqs,
                             const FrozenEmbedder* embedder) {
  std::vector<int> preds;
  preds.reserve(seqs.size());
  for (const auto& s : seqs) preds.push_back(model.predict(s, embedder));
  return preds;
}

// ------------------------------------------------------------------ bundles

void save_classifier_bundle(const std::string& dir, const ClassifierModel& model,
                            int sensor_input_dim) {
  nlohmann::json cfg;
  cfg["classifier"] = model.config();
  cfg["labels"] = model.labels().names();
  cfg["sensor_input_dim"] = sensor_input_dim;
  std::vector<BundleParamView> views;
  for (const auto& p : model.parameters())
    views.push_back({p.name(), p.shape(), p.data()});
  save_bundle(dir, "classifier", cfg.dump(), views);
}

ClassifierModel classifier_from_bundle(const std::string& dir) {
  LoadedBundle bundle = load_bundle(dir);
  if (bundle.model_type != "classifier")
    throw DataError("expected a classifier bundle in " + dir + ", found '" +
                    bundle.model_type + "'");
  nlohmann::json cfg = nlohmann::json::parse(bundle.config_json);
  ClassifierConfig ccfg = cfg.at("classifier").get<ClassifierConfig>();
  LabelRegistry labels(cfg.at("labels").get<std::vector<std::string>>());
  Rng rng(0);
  ClassifierModel model(ccfg, cfg.at("sensor_input_dim").get<int>(), labels, rng);
  std::vector<std::vector<float>> values;
  for (auto& p : bundle.params) values.push_back(std::move(p.data));
  model.restore(values);
  return model;
}

}  // namespace adlr
