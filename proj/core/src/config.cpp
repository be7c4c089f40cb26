// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/config.hpp"

#include <fstream>

#include <json.hpp>

#include "serde.hpp"

namespace adlr {

namespace {

using nlohmann::json;

void to_json(json& j, const SplitSettings& s) {
  j = {{"train_ratio", s.train_ratio}, {"seed", s.seed}};
}

void from_json(const json& j, SplitSettings& s) {
  check_known_fields(j, {"train_ratio", "seed"}, "split settings");
  s.train_ratio = j.value("train_ratio", s.train_ratio);
  s.seed = j.value("seed", s.seed);
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["gpt"] = cfg.gpt;
  j["classifier"] = cfg.classifier;
  j["hier"] = cfg.hier;
  j["pretrain"] = cfg.pretrain;
  j["train"] = cfg.train;
  to_json(j["split"], cfg.split);
  j["seeds"] = cfg.seeds;
  return j;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw UsageError("run config: malformed JSON");
  check_known_fields(j,
                     {"schema_version", "gpt", "classifier", "hier", "pretrain",
                      "train", "split", "seeds"},
                     "run config");
  RunConfig cfg;
  if (!j.contains("schema_version"))
    throw UsageError("run config: missing schema_version");
  cfg.schema_version = j.at("schema_version").get<int>();
  if (cfg.schema_version != 1)
    throw UsageError("run config: unsupported schema_version " +
                     std::to_string(cfg.schema_version));
  if (j.contains("gpt")) cfg.gpt = j.at("gpt").get<GptConfig>();
  if (j.contains("classifier"))
    cfg.classifier = j.at("classifier").get<ClassifierConfig>();
  if (j.contains("hier")) cfg.hier = j.at("hier").get<HierConfig>();
  if (j.contains("pretrain")) cfg.pretrain = j.at("pretrain").get<PretrainSettings>();
  if (j.contains("train")) cfg.train = j.at("train").get<TrainSettings>();
  if (j.contains("split")) from_json(j.at("split"), cfg.split);
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

std::string run_config_json(const RunConfig& cfg, int indent) {
  return run_config_to_json(cfg).dump(indent);
}

std::string fnv1a_hex(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& cfg) {
  return fnv1a_hex(run_config_json(cfg));
}

}  // namespace adlr
