// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/gpt.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "adlr/bundle.hpp"
#include "serde.hpp"

namespace adlr {

namespace {

using nlohmann::json;

}  // namespace

void GptConfig::validate() const {
  if (vocab_size < 2) throw UsageError("gpt config: vocab_size must be >= 2");
  if (d_model <= 0 || n_heads <= 0 || n_layers <= 0)
    throw UsageError("gpt config: dimensions must be positive");
  if (d_model % n_heads != 0)
    throw UsageError("gpt config: d_model " + std::to_string(d_model) +
                     " not divisible by n_heads " + std::to_string(n_heads));
  if (context_len < 2) throw UsageError("gpt config: context_len must be >= 2");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw UsageError("gpt config: dropout_p must be in [0, 1)");
}

int64_t GptConfig::param_count() const {
  const int64_t v = vocab_size, d = d_model, ctx = context_len;
  int64_t per_block = 2 * d               // ln1
                      + d * 3 * d + 3 * d  // qkv
                      + d * d + d          // proj
                      + 2 * d              // ln2
                      + d * 4 * d + 4 * d  // fc1
                      + 4 * d * d + d;     // fc2
  int64_t total = v * d + ctx * d + n_layers * per_block + 2 * d;
  if (!tie_lm_head) total += d * v;
  return total;
}

std::vector<std::vector<int>> chunk_corpus(const std::vector<int>& stream,
                                           int context_len) {
  if (stream.size() < 2)
    throw UsageError("chunk_corpus: stream must hold at least 2 tokens");
  if (context_len < 2) throw UsageError("chunk_corpus: context_len must be >= 2");
  std::vector<std::vector<int>> chunks;
  const size_t ctx = static_cast<size_t>(context_len);
  for (size_t pos = 0; pos < stream.size(); pos += ctx) {
    const size_t len = std::min(ctx, stream.size() - pos);
    if (len < 2) break;  // a single trailing token predicts nothing
    chunks.emplace_back(stream.begin() + pos, stream.begin() + pos + len);
  }
  return chunks;
}

namespace {

// Sum of next-token negative log-likelihoods over one chunk, in double.
std::pair<double, size_t> chunk_nll(const GptModel<float>& model,
                                    const std::vector<int>& chunk) {
  NoGradGuard ng;
  auto fwd = model.forward(chunk);
  const size_t len = chunk.size();
  const size_t v = static_cast<size_t>(model.config().vocab_size);
  const auto logits = fwd.logits.data();
  double total = 0.0;
  for (size_t pos = 0; pos + 1 < len; ++pos) {
    const float* lp = logits.data() + pos * v;
    double mx = lp[0];
    for (size_t j = 1; j < v; ++j) mx = std::max<double>(mx, lp[j]);
    double z = 0.0;
    for (size_t j = 0; j < v; ++j) z += std::exp(static_cast<double>(lp[j]) - mx);
    total += mx + std::log(z) - static_cast<double>(lp[chunk[pos + 1]]);
  }
  return {total, len - 1};
}

}  // namespace

double perplexity(const GptModel<float>& model, const std::vector<int>& stream) {
  auto chunks = chunk_corpus(stream, model.config().context_len);
  double total = 0.0;
  size_t count = 0;
  for (const auto& chunk : chunks) {
    auto [nll, n] = chunk_nll(model, chunk);
    total += nll;
    count += n;
  }
  return std::exp(total / static_cast<double>(count));
}

std::pair<GptModel<float>, PretrainResult> pretrain(const std::vector<int>& stream,
                                                    const GptConfig& cfg,
                                                    const PretrainSettings& settings) {
  if (settings.val_fraction <= 0.0 || settings.val_fraction >= 1.0)
    throw UsageError("pretrain: val_fraction must be in (0, 1)");
  const size_t split = stream.size() -
                       static_cast<size_t>(settings.val_fraction *
                                           static_cast<double>(stream.size()));
  std::vector<int> train_stream(stream.begin(), stream.begin() + split);
  std::vector<int> val_stream(stream.begin() + split, stream.end());
  if (train_stream.size() < 2 || val_stream.size() < 2)
    throw DataError("pretrain: stream too short to carve out a validation tail");

  Rng rng(settings.seed);
  GptModel<float> model(cfg, rng, /*trainable=*/true);
  auto chunks = chunk_corpus(train_stream, cfg.context_len);

  Adam<float> opt(model.parameters(), AdamConfig{.lr = settings.lr});
  PretrainResult result;
  std::vector<std::vector<float>> best_snapshot = model.snapshot();
  int epochs_since_best = 0;

  std::vector<size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < settings.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t step = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(settings.batch_chunks)) {
      const size_t stop =
          std::min(order.size(), start + static_cast<size_t>(settings.batch_chunks));
      const float inv_batch = 1.0f / static_cast<float>(stop - start);
      double batch_loss = 0.0;
      for (size_t i = start; i < stop; ++i) {
        const auto& chunk = chunks[order[i]];
        auto fwd = model.forward(chunk, /*train_mode=*/true, &rng);
        std::vector<int> targets(chunk.begin() + 1, chunk.end());
        Tensor<float> loss = cross_entropy(
            slice(fwd.logits, 0, chunk.size() - 1, 0,
                  static_cast<size_t>(cfg.vocab_size)),
            targets);
        batch_loss += loss.item();
        scale(loss, inv_batch).backward();
      }
      if (!std::isfinite(batch_loss))
        throw DivergenceError("pretrain diverged at epoch " +
                              std::to_string(epoch) + ", step " +
                              std::to_string(step));
      opt.step();
      epoch_loss += batch_loss * inv_batch;
      ++step;
    }

    const double val_ppl = perplexity(model, val_stream);
    PretrainEpoch entry{epoch, epoch_loss / static_cast<double>(step), val_ppl,
                        false};
    if (result.best_epoch < 0 || val_ppl < result.best_val_perplexity) {
      result.best_epoch = epoch;
      result.best_val_perplexity = val_ppl;
      best_snapshot = model.snapshot();
      entry.is_best = true;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    result.log.push_back(entry);
    if (epochs_since_best >= settings.patience) break;
  }

  model.restore(best_snapshot);
  return {std::move(model), std::move(result)};
}

FloatMatrix embed(const GptModel<float>& model, std::span<const int> ids) {
  if (ids.empty()) throw UsageError("embed: empty sequence");
  NoGradGuard ng;
  const size_t ctx = static_cast<size_t>(model.config().context_len);
  FloatMatrix out;
  out.rows = ids.size();
  out.cols = static_cast<size_t>(model.config().d_model);
  out.data.reserve(out.rows * out.cols);
  for (size_t pos = 0; pos < ids.size(); pos += ctx) {
    const size_t len = std::min(ctx, ids.size() - pos);
    auto fwd = model.forward(ids.subspan(pos, len));
    const auto h = fwd.hidden.data();
    out.data.insert(out.data.end(), h.begin(), h.end());
  }
  return out;
}

// ------------------------------------------------------- attention export

AttentionRecord attention_export(const GptModel<float>& model,
                                 std::span<const int> ids, const Vocabulary& vocab,
                                 std::optional<int> target) {
  if (target && (*target < 0 || static_cast<size_t>(*target) >= ids.size()))
    throw UsageError("attention_export: target position " +
                     std::to_string(*target) + " out of range");
  NoGradGuard ng;
  auto fwd = model.forward(ids, false, nullptr, /*want_attention=*/true);

  AttentionRecord rec;
  rec.n_layers = model.config().n_layers;
  rec.n_heads = model.config().n_heads;
  rec.target = target;
  rec.tokens.reserve(ids.size());
  for (int id : ids) rec.tokens.push_back(vocab.token_of(id));

  const size_t len = ids.size();
  for (const auto& layer : fwd.attention) {
    std::vector<std::vector<float>> heads;
    heads.reserve(layer.size());
    for (const auto& w : layer) {
      const auto wd = w.data();
      if (target) {
        const size_t t = static_cast<size_t>(*target);
        heads.emplace_back(wd.begin() + t * len, wd.begin() + (t + 1) * len);
      } else {
        heads.emplace_back(wd.begin(), wd.end());
      }
    }
    rec.weights.push_back(std::move(heads));
  }
  return rec;
}

void save_attention(const std::string& path, const AttentionRecord& record) {
  json doc;
  doc["format"] = "adlr-attention";
  doc["version"] = 1;
  doc["tokens"] = record.tokens;
  doc["n_layers"] = record.n_layers;
  doc["n_heads"] = record.n_heads;
  if (record.target) doc["target"] = *record.target;
  doc["weights"] = record.weights;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write attention record: " + path);
  out << doc.dump() << '\n';
}

AttentionRecord load_attention(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open attention record: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || doc.value("format", "") != "adlr-attention")
    throw DataError("not an attention record: " + path);
  AttentionRecord rec;
  rec.tokens = doc.at("tokens").get<std::vector<std::string>>();
  rec.n_layers = doc.at("n_layers").get<int>();
  rec.n_heads = doc.at("n_heads").get<int>();
  if (doc.contains("target")) rec.target = doc.at("target").get<int>();
  rec.weights =
      doc.at("weights").get<std::vector<std::vector<std::vector<float>>>>();
  return rec;
}

// ----------------------------------------------------------------- bundles

std::string gpt_config_json(const GptConfig& cfg) { return json(cfg).dump(); }

GptConfig gpt_config_from_json(const std::string& text) {
  return json::parse(text).get<GptConfig>();
}

namespace {

GptModel<float> gpt_from_bundle_params(
    const GptConfig& cfg, const std::vector<std::vector<float>>& values,
    bool trainable) {
  Rng rng(0);
  GptModel<float> model(cfg, rng, trainable);
  model.restore(values);
  return model;
}

}  // namespace

void save_gpt_bundle(const std::string& dir, const GptModel<float>& model,
                     const Vocabulary& vocab) {
  std::vector<BundleParamView> views;
  for (const auto& p : model.parameters())
    views.push_back({p.name(), p.shape(), p.data()});
  save_bundle(dir, "gpt", gpt_config_json(model.config()), views);
  save_vocab((std::filesystem::path(dir) / "vocab.json").string(), vocab);
}

std::pair<GptModel<float>, Vocabulary> load_gpt_bundle(const std::string& dir,
                                                       bool trainable) {
  LoadedBundle bundle = load_bundle(dir);
  if (bundle.model_type != "gpt")
    throw DataError("expected a gpt bundle in " + dir + ", found '" +
                    bundle.model_type + "'");
  GptConfig cfg = gpt_config_from_json(bundle.config_json);
  std::vector<std::vector<float>> values;
  values.reserve(bundle.params.size());
  for (auto& p : bundle.params) values.push_back(std::move(p.data));
  GptModel<float> model = gpt_from_bundle_params(cfg, values, trainable);
  Vocabulary vocab =
      load_vocab((std::filesystem::path(dir) / "vocab.json").string());
  if (vocab.total_indices() != cfg.vocab_size)
    throw DataError("vocabulary in " + dir + " does not match bundle config");
  return {std::move(model), std::move(vocab)};
}

}  // namespace adlr
