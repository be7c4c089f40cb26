// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <adlr/gpt.hpp>

#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"

using namespace adlr;

namespace {

template <typename S>
void zero_all_params(GptModel<S>& model) {
  for (auto& p : model.parameters())
    for (auto& v : p.mutable_data()) v = S(0);
}

template <typename S>
Tensor<S> find_param(const GptModel<S>& model, const std::string& name) {
  for (const auto& p : model.parameters())
    if (p.name() == name) return p;
  FAIL("missing parameter ", name);
  return {};
}

std::vector<int> cycle_stream(int n_tokens, int period, int first = 1) {
  std::vector<int> stream(n_tokens);
  for (int i = 0; i < n_tokens; ++i) stream[i] = first + i % period;
  return stream;
}

}  // namespace

TEST_CASE("chunk_corpus windows and the trailing-chunk rule") {
  auto chunks = chunk_corpus(cycle_stream(2500, 16), 1024);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].size() == 1024);
  CHECK(chunks[1].size() == 1024);
  CHECK(chunks[2].size() == 452);

  auto one_left = chunk_corpus(cycle_stream(1025, 16), 1024);
  REQUIRE(one_left.size() == 1);
  CHECK(one_left[0].size() == 1024);

  size_t kept = 0;
  for (const auto& c : chunks) kept += c.size();
  CHECK(kept <= 2500);

  CHECK_THROWS_AS(chunk_corpus({5}, 1024), UsageError);
}

TEST_CASE("config validation") {
  GptConfig cfg{.vocab_size = 10, .d_model = 12, .n_heads = 5};
  CHECK_THROWS_AS(cfg.validate(), UsageError);  // 12 % 5 != 0
  cfg.n_heads = 4;
  cfg.context_len = 1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg.context_len = 16;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("forward shape contract and causal attention structure") {
  GptConfig cfg{.vocab_size = 12, .d_model = 16, .n_heads = 4, .n_layers = 2,
                .context_len = 16, .dropout_p = 0.0};
  Rng rng(1);
  GptModel<float> model(cfg, rng, true);
  std::vector<int> ids{1, 4, 2, 9, 3, 3, 7};
  auto fwd = model.forward(ids, false, nullptr, /*want_attention=*/true);

  CHECK(fwd.logits.shape() == Shape{7, 12});
  CHECK(fwd.hidden.shape() == Shape{7, 16});
  REQUIRE(fwd.attention.size() == 2);
  REQUIRE(fwd.attention[0].size() == 4);
  for (const auto& layer : fwd.attention)
    for (const auto& head : layer) {
      REQUIRE(head.shape() == Shape{7, 7});
      for (size_t i = 0; i < 7; ++i) {
        double sum = 0.0;
        for (size_t j = 0; j < 7; ++j) {
          if (j > i) CHECK(head.at(i, j) == 0.0f);  // exact zero above diagonal
          sum += head.at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
      }
    }

  CHECK_THROWS_AS(model.forward(cycle_stream(17, 4)), UsageError);
  CHECK_THROWS_AS(model.forward(std::vector<int>{}), UsageError);
}

TEST_CASE("perturbing a token leaves earlier logits bit-identical") {
  GptConfig cfg{.vocab_size = 20, .d_model = 16, .n_heads = 4, .n_layers = 2,
                .context_len = 32, .dropout_p = 0.0};
  Rng rng(3);
  GptModel<float> model(cfg, rng, true);
  Rng data_rng(17);
  for (int pair = 0; pair < 10; ++pair) {
    std::vector<int> ids(32);
    for (auto& id : ids) id = 1 + static_cast<int>(data_rng.bounded(19));
    const size_t k = 1 + data_rng.bounded(30);
    std::vector<int> perturbed = ids;
    perturbed[k] = 1 + static_cast<int>((perturbed[k] + 3) % 19);

    auto a = model.forward(ids);
    auto b = model.forward(perturbed);
    const size_t v = 20;
    for (size_t pos = 0; pos < k; ++pos)
      for (size_t j = 0; j < v; ++j)
        CHECK(a.logits.at(pos, j) == b.logits.at(pos, j));
  }
}

TEST_CASE("a zeroed model emits uniform logits: perplexity equals vocab size") {
  GptConfig cfg{.vocab_size = 8, .d_model = 4, .n_heads = 2, .n_layers = 1,
                .context_len = 16, .dropout_p = 0.0};
  Rng rng(2);
  GptModel<float> model(cfg, rng, true);
  zero_all_params(model);
  CHECK(perplexity(model, cycle_stream(64, 7, 0)) ==
        doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("perplexity matches a hand computation with pinned logits") {
  // With every parameter zeroed and the final layer-norm gain at zero, the
  // hidden state at each position is exactly the layer-norm bias, so the
  // tied head gives constant logits c_j = <bias, emb_j>.
  GptConfig cfg{.vocab_size = 4, .d_model = 2, .n_heads = 1, .n_layers = 1,
                .context_len = 8, .dropout_p = 0.0};
  Rng rng(5);
  GptModel<float> model(cfg, rng, true);
  zero_all_params(model);
  {
    auto emb = find_param(model, "tok_emb").mutable_data();
    const float col0[4] = {0.5f, -0.3f, 0.1f, 0.0f};
    for (int j = 0; j < 4; ++j) emb[j * 2] = col0[j];
    auto lnf_b = find_param(model, "lnf_b").mutable_data();
    lnf_b[0] = 1.0f;
  }
  const double c[4] = {0.5, -0.3, 0.1, 0.0};
  double z = 0.0;
  for (double v : c) z += std::exp(v);
  const double lse = std::log(z);
  // Stream {0,1,2}: two predictions with targets 1 and 2.
  const double expected = std::exp(((lse - c[1]) + (lse - c[2])) / 2.0);
  CHECK(perplexity(model, {0, 1, 2}) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("a model certain of the true next token has perplexity one") {
  GptConfig cfg{.vocab_size = 4, .d_model = 2, .n_heads = 1, .n_layers = 1,
                .context_len = 8, .dropout_p = 0.0};
  Rng rng(5);
  GptModel<float> model(cfg, rng, true);
  zero_all_params(model);
  {
    auto emb = find_param(model, "tok_emb").mutable_data();
    emb[2 * 2] = 40.0f;  // logit margin for token 2
    find_param(model, "lnf_b").mutable_data()[0] = 1.0f;
  }
  CHECK(perplexity(model, std::vector<int>(32, 2)) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("an untrained model scores near-uniform perplexity") {
  GptConfig cfg{.vocab_size = 20, .d_model = 16, .n_heads = 4, .n_layers = 2,
                .context_len = 32, .dropout_p = 0.0};
  Rng rng(11);
  GptModel<float> model(cfg, rng, true);
  Rng data_rng(4);
  std::vector<int> stream(512);
  for (auto& t : stream) t = 1 + static_cast<int>(data_rng.bounded(19));
  const double ppl = perplexity(model, stream);
  CHECK(ppl > 0.8 * 20);
  CHECK(ppl < 1.2 * 20);
}

TEST_CASE("embedding extraction: shape, determinism, prefix, windowing") {
  GptConfig cfg{.vocab_size = 12, .d_model = 8, .n_heads = 2, .n_layers = 1,
                .context_len = 8, .dropout_p = 0.1};
  Rng rng(7);
  GptModel<float> model(cfg, rng, true);

  std::vector<int> ids{1, 2, 3, 4, 5, 6};
  auto e1 = embed(model, ids);
  CHECK(e1.rows == 6);
  CHECK(e1.cols == 8);
  auto e2 = embed(model, ids);
  CHECK(e1.data == e2.data);  // bit-identical, dropout is off when frozen

  // Prefix property within one window.
  auto prefix = embed(model, std::vector<int>{1, 2, 3});
  for (size_t r = 0; r < 3; ++r)
    for (size_t c = 0; c < 8; ++c) CHECK(prefix.at(r, c) == e1.at(r, c));

  // Longer than the context: consecutive windows concatenated.
  auto long_ids = cycle_stream(20, 11);
  auto e3 = embed(model, long_ids);
  CHECK(e3.rows == 20);
  auto window = embed(model, std::vector<int>(long_ids.begin() + 8,
                                              long_ids.begin() + 16));
  for (size_t r = 0; r < 8; ++r)
    for (size_t c = 0; c < 8; ++c) CHECK(e3.at(8 + r, c) == window.at(r, c));

  CHECK_THROWS_AS(embed(model, std::vector<int>{}), UsageError);
}

TEST_CASE("the final layer norm is applied where configured") {
  GptConfig cfg{.vocab_size = 10, .d_model = 8, .n_heads = 2, .n_layers = 1,
                .context_len = 8, .dropout_p = 0.0};
  Rng rng(9);
  GptModel<float> model(cfg, rng, true);
  std::vector<int> ids{1, 2, 3};
  auto before = embed(model, ids);
  for (auto& v : find_param(model, "lnf_g").mutable_data()) v *= 2.0f;
  auto after = embed(model, ids);
  CHECK(before.data != after.data);
}

TEST_CASE("composed decoder gradient passes finite differences in double") {
  GptConfig cfg{.vocab_size = 9, .d_model = 8, .n_heads = 2, .n_layers = 2,
                .context_len = 8, .dropout_p = 0.0};
  Rng rng(13);
  GptModel<double> model(cfg, rng, true);
  const std::vector<int> ids{1, 3, 5, 2, 8, 4};
  const std::vector<int> targets{3, 5, 2, 8, 4};

  auto leaves = model.parameters();
  auto loss_fn = [&](const std::vector<Tensor<double>>&) {
    auto fwd = model.forward(ids);
    return cross_entropy(slice(fwd.logits, 0, 5, 0, 9), targets);
  };
  CHECK(adlr::test::grad_check(loss_fn, leaves) < 1e-3);
}

TEST_CASE("pretraining learns a deterministic cycle and is reproducible") {
  const auto stream = cycle_stream(1200, 8);
  GptConfig cfg{.vocab_size = 9, .d_model = 16, .n_heads = 2, .n_layers = 1,
                .context_len = 16, .dropout_p = 0.1};
  PretrainSettings settings{.lr = 3e-3, .batch_chunks = 8, .max_epochs = 30,
                            .patience = 5, .val_fraction = 0.2, .seed = 1};
  auto [model, log] = pretrain(stream, cfg, settings);

  CHECK(log.best_val_perplexity < 1.1);
  REQUIRE(!log.log.empty());
  CHECK(log.best_val_perplexity <= log.log.front().val_perplexity);
  CHECK(log.log[log.best_epoch].is_best);

  // The returned checkpoint reproduces the logged best validation score.
  const size_t split = stream.size() - static_cast<size_t>(0.2 * stream.size());
  std::vector<int> val_stream(stream.begin() + split, stream.end());
  CHECK(perplexity(model, val_stream) ==
        doctest::Approx(log.best_val_perplexity).epsilon(1e-12));

  auto [model2, log2] = pretrain(stream, cfg, settings);
  auto p1 = model.parameters(), p2 = model2.parameters();
  REQUIRE(p1.size() == p2.size());
  for (size_t i = 0; i < p1.size(); ++i) {
    auto d1 = p1[i].data(), d2 = p2[i].data();
    CHECK(std::equal(d1.begin(), d1.end(), d2.begin()));
  }
}

TEST_CASE("attention export filtering and round trip") {
  GptConfig cfg{.vocab_size = 10, .d_model = 8, .n_heads = 2, .n_layers = 2,
                .context_len = 16, .dropout_p = 0.0};
  Rng rng(21);
  GptModel<float> model(cfg, rng, true);

  std::vector<std::pair<std::string, std::string>> toks;
  for (int i = 0; i < 6; ++i) toks.emplace_back("M00" + std::to_string(i), "ON");
  ActivitySequence seq;
  int64_t t = 0;
  for (auto& [s, v] : toks) {
    seq.events.push_back({s, v, Timestamp{t}, std::nullopt});
    t += kMicrosPerSecond;
  }
  seq.label = "Task";
  seq.start_ts = seq.events.front().ts;
  seq.end_ts = seq.events.back().ts;
  auto vocab = build_vocab({seq});

  std::vector<int> ids{1, 2, 3, 4, 5, 6};
  auto full = attention_export(model, ids, vocab, std::nullopt);
  auto filtered = attention_export(model, ids, vocab, 5);

  REQUIRE(full.weights.size() == 2);
  REQUIRE(full.weights[0].size() == 2);
  CHECK(full.weights[0][0].size() == 36);
  CHECK(filtered.weights[0][0].size() == 6);
  // The filtered record is exactly the target row of the full matrices.
  for (int l = 0; l < 2; ++l)
    for (int h = 0; h < 2; ++h)
      for (int j = 0; j < 6; ++j)
        CHECK(filtered.weights[l][h][j] == full.weights[l][h][5 * 6 + j]);
  for (const auto& layer : filtered.weights)
    for (const auto& head : layer) {
      double sum = 0.0;
      for (float w : head) sum += w;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
  CHECK(filtered.tokens[0] == vocab.token_of(1));

  const auto path = std::filesystem::temp_directory_path() / "adlr_attn_test.json";
  save_attention(path.string(), filtered);
  auto loaded = load_attention(path.string());
  CHECK(loaded.tokens == filtered.tokens);
  REQUIRE(loaded.target.has_value());
  CHECK(*loaded.target == 5);
  CHECK(loaded.weights == filtered.weights);  // exact float round trip
  std::filesystem::remove(path);

  CHECK_THROWS_AS(attention_export(model, ids, vocab, 6), UsageError);
}

TEST_CASE("gpt bundle round trip is bit-exact") {
  GptConfig cfg{.vocab_size = 9, .d_model = 8, .n_heads = 2, .n_layers = 1,
                .context_len = 8, .dropout_p = 0.1};
  Rng rng(31);
  GptModel<float> model(cfg, rng, true);

  ActivitySequence seq;
  int64_t t = 0;
  for (int i = 0; i < 6; ++i) {
    seq.events.push_back({"M00" + std::to_string(i), "ON", Timestamp{t}, {}});
    t += kMicrosPerSecond;
  }
  seq.label = "Task";
  seq.start_ts = seq.events.front().ts;
  seq.end_ts = seq.events.back().ts;
  auto vocab = build_vocab({seq});

  const auto dir = std::filesystem::temp_directory_path() / "adlr_gpt_bundle_test";
  std::filesystem::remove_all(dir);
  save_gpt_bundle(dir.string(), model, vocab);
  auto [loaded, loaded_vocab] = load_gpt_bundle(dir.string());

  CHECK(loaded.config() == cfg);
  CHECK(loaded_vocab.vocab_size() == vocab.vocab_size());
  auto p1 = model.parameters(), p2 = loaded.parameters();
  REQUIRE(p1.size() == p2.size());
  for (size_t i = 0; i < p1.size(); ++i) {
    auto d1 = p1[i].data(), d2 = p2[i].data();
    REQUIRE(d1.size() == d2.size());
    CHECK(std::equal(d1.begin(), d1.end(), d2.begin()));
  }

  std::vector<int> ids{1, 2, 3, 4};
  auto e1 = embed(model, ids);
  auto e2 = embed(loaded, ids);
  CHECK(e1.data == e2.data);

  // Loaded frozen models track no gradients.
  CHECK_FALSE(loaded.parameters()[0].requires_grad());
  std::filesystem::remove_all(dir);
}
