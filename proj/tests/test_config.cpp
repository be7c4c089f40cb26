// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <adlr/config.hpp>
#include <adlr/experiment.hpp>

using namespace adlr;

TEST_CASE("run config round trips through its JSON form") {
  RunConfig cfg;
  cfg.gpt.d_model = 32;
  cfg.gpt.n_heads = 4;
  cfg.train.lr = 1e-3;
  cfg.hier.time.hour_embed_dim = 12;
  cfg.seeds = {3, 5, 8};

  auto text = run_config_json(cfg, 2);
  auto parsed = run_config_from_json(text);
  CHECK(parsed.gpt == cfg.gpt);
  CHECK(parsed.classifier == cfg.classifier);
  CHECK(parsed.hier == cfg.hier);
  CHECK(parsed.pretrain == cfg.pretrain);
  CHECK(parsed.train == cfg.train);
  CHECK(parsed.split == cfg.split);
  CHECK(parsed.seeds == cfg.seeds);
}

TEST_CASE("unknown fields are rejected at every level") {
  CHECK_THROWS_AS(run_config_from_json(R"({"schema_version":1,"bogus":2})"),
                  UsageError);
  CHECK_THROWS_AS(
      run_config_from_json(R"({"schema_version":1,"gpt":{"d_modell":32}})"),
      UsageError);
  CHECK_THROWS_AS(
      run_config_from_json(
          R"({"schema_version":1,"train":{"learning_rate":0.1}})"),
      UsageError);
  CHECK_THROWS_AS(
      run_config_from_json(
          R"({"schema_version":1,"hier":{"time_branch":{"enable":true}}})"),
      UsageError);
}

TEST_CASE("schema version is mandatory and pinned") {
  CHECK_THROWS_AS(run_config_from_json(R"({"gpt":{}})"), UsageError);
  CHECK_THROWS_AS(run_config_from_json(R"({"schema_version":2})"), UsageError);
  CHECK_NOTHROW(run_config_from_json(R"({"schema_version":1})"));
}

TEST_CASE("malformed JSON is a usage error") {
  CHECK_THROWS_AS(run_config_from_json("{nope"), UsageError);
}

TEST_CASE("config hashes are stable and sensitive to changes") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.train.lr *= 2.0;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("variant names parse back to themselves") {
  for (Variant v : {Variant::GptAr, Variant::BaselineBiLstm, Variant::GptArExtended,
                    Variant::GptArExtendedSep, Variant::GptHarNote, Variant::GptHar}) {
    auto parsed = parse_variant(variant_name(v));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == v);
  }
  CHECK_FALSE(parse_variant("elmo").has_value());

  auto list = parse_variant_list("gpthar,gpthar-note");
  REQUIRE(list.size() == 2);
  CHECK(list[0] == Variant::GptHar);
  CHECK(list[1] == Variant::GptHarNote);
  CHECK_THROWS_AS(parse_variant_list("gpthar,wrong"), UsageError);
}
