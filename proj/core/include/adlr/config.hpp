// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one JSON document with a schema-version field covering
// model, training, and split settings. Unknown fields are rejected; CLI
// flags override file values; the effective config echoes into run_meta via
// its hash.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adlr/classify.hpp"
#include "adlr/gpt.hpp"
#include "adlr/hier.hpp"

namespace adlr {

struct SplitSettings {
  double train_ratio = 0.7;
  uint64_t seed = 0;
  bool operator==(const SplitSettings&) const = default;
};

struct RunConfig {
  int schema_version = 1;
  GptConfig gpt;              // vocab_size 0 means "derive from the data"
  ClassifierConfig classifier;
  HierConfig hier;
  PretrainSettings pretrain;
  TrainSettings train;
  SplitSettings split;
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string run_config_json(const RunConfig& cfg, int indent = -1);

// FNV-1a hex digest of the canonical config JSON.
std::string config_hash(const RunConfig& cfg);
std::string fnv1a_hex(const std::string& text);

}  // namespace adlr
