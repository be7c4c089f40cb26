// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON (de)serializers for config structs. Internal to core/src; public
// headers stay free of the JSON dependency.

#pragma once

#include <json.hpp>

#include "adlr/classify.hpp"
#include "adlr/errors.hpp"
#include "adlr/gpt.hpp"
#include "adlr/hier.hpp"

namespace adlr {

// Strict field extraction: every reader pulls known keys and callers reject
// unknown ones via check_known_fields.
inline void check_known_fields(const nlohmann::json& j,
                               std::initializer_list<const char*> known,
                               const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw UsageError("unknown field '" + it.key() + "' in " + where);
  }
}

inline void to_json(nlohmann::json& j, const GptConfig& c) {
  j = {{"vocab_size", c.vocab_size},   {"d_model", c.d_model},
       {"n_heads", c.n_heads},         {"n_layers", c.n_layers},
       {"context_len", c.context_len}, {"dropout_p", c.dropout_p},
       {"tie_lm_head", c.tie_lm_head}};
}

inline void from_json(const nlohmann::json& j, GptConfig& c) {
  check_known_fields(j,
                     {"vocab_size", "d_model", "n_heads", "n_layers",
                      "context_len", "dropout_p", "tie_lm_head"},
                     "gpt config");
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.d_model = j.value("d_model", c.d_model);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.context_len = j.value("context_len", c.context_len);
  c.dropout_p = j.value("dropout_p", c.dropout_p);
  c.tie_lm_head = j.value("tie_lm_head", c.tie_lm_head);
}

inline void to_json(nlohmann::json& j, const PretrainSettings& s) {
  j = {{"lr", s.lr},
       {"batch_chunks", s.batch_chunks},
       {"max_epochs", s.max_epochs},
       {"patience", s.patience},
       {"val_fraction", s.val_fraction},
       {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, PretrainSettings& s) {
  check_known_fields(
      j, {"lr", "batch_chunks", "max_epochs", "patience", "val_fraction", "seed"},
      "pretrain settings");
  s.lr = j.value("lr", s.lr);
  s.batch_chunks = j.value("batch_chunks", s.batch_chunks);
  s.max_epochs = j.value("max_epochs", s.max_epochs);
  s.patience = j.value("patience", s.patience);
  s.val_fraction = j.value("val_fraction", s.val_fraction);
  s.seed = j.value("seed", s.seed);
}

inline void to_json(nlohmann::json& j, const TrainSettings& s) {
  j = {{"lr", s.lr},
       {"batch_size", s.batch_size},
       {"max_epochs", s.max_epochs},
       {"patience", s.patience},
       {"val_week_fraction", s.val_week_fraction},
       {"stop_on_loss", s.stop_on_loss}};
}

inline void from_json(const nlohmann::json& j, TrainSettings& s) {
  check_known_fields(j,
                     {"lr", "batch_size", "max_epochs", "patience",
                      "val_week_fraction", "stop_on_loss"},
                     "train settings");
  s.lr = j.value("lr", s.lr);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.max_epochs = j.value("max_epochs", s.max_epochs);
  s.patience = j.value("patience", s.patience);
  s.val_week_fraction = j.value("val_week_fraction", s.val_week_fraction);
  s.stop_on_loss = j.value("stop_on_loss", s.stop_on_loss);
}

inline void to_json(nlohmann::json& j, const ClassifierConfig& c) {
  j = {{"variant", c.variant == ClassifierVariant::GptAr ? "gptar" : "baseline-bilstm"},
       {"context_mode", c.context_mode == ContextMode::Single     ? "single"
                        : c.context_mode == ContextMode::Extended ? "extended"
                                                                  : "extended-sep"},
       {"lstm_hidden", c.lstm_hidden},
       {"n_classes", c.n_classes},
       {"max_seq_len", c.max_seq_len},
       {"baseline_embed_dim", c.baseline_embed_dim}};
}

inline void from_json(const nlohmann::json& j, ClassifierConfig& c) {
  check_known_fields(j,
                     {"variant", "context_mode", "lstm_hidden", "n_classes",
                      "max_seq_len", "baseline_embed_dim"},
                     "classifier config");
  if (j.contains("variant")) {
    const std::string v = j.at("variant").get<std::string>();
    if (v == "gptar")
      c.variant = ClassifierVariant::GptAr;
    else if (v == "baseline-bilstm")
      c.variant = ClassifierVariant::BaselineBiLstm;
    else
      throw UsageError("unknown classifier variant '" + v + "'");
  }
  if (j.contains("context_mode")) {
    const std::string m = j.at("context_mode").get<std::string>();
    if (m == "single")
      c.context_mode = ContextMode::Single;
    else if (m == "extended")
      c.context_mode = ContextMode::Extended;
    else if (m == "extended-sep")
      c.context_mode = ContextMode::ExtendedSep;
    else
      throw UsageError("unknown context mode '" + m + "'");
  }
  c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  c.baseline_embed_dim = j.value("baseline_embed_dim", c.baseline_embed_dim);
}

inline void to_json(nlohmann::json& j, const TimeBranchConfig& c) {
  j = {{"enabled", c.enabled},
       {"hour_embed_dim", c.hour_embed_dim},
       {"hour_lstm_hidden", c.hour_lstm_hidden}};
}

inline void from_json(const nlohmann::json& j, TimeBranchConfig& c) {
  check_known_fields(j, {"enabled", "hour_embed_dim", "hour_lstm_hidden"},
                     "time branch config");
  c.enabled = j.value("enabled", c.enabled);
  c.hour_embed_dim = j.value("hour_embed_dim", c.hour_embed_dim);
  c.hour_lstm_hidden = j.value("hour_lstm_hidden", c.hour_lstm_hidden);
}

inline void to_json(nlohmann::json& j, const HierConfig& c) {
  j = {{"n_classes", c.n_classes},
       {"lstm_hidden", c.lstm_hidden},
       {"top_hidden", c.top_hidden},
       {"max_seq_len", c.max_seq_len},
       {"share_low_level", c.share_low_level},
       {"time_branch", c.time}};
}

inline void from_json(const nlohmann::json& j, HierConfig& c) {
  check_known_fields(j,
                     {"n_classes", "lstm_hidden", "top_hidden", "max_seq_len",
                      "share_low_level", "time_branch"},
                     "hier config");
  c.n_classes = j.value("n_classes", c.n_classes);
  c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
  c.top_hidden = j.value("top_hidden", c.top_hidden);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  c.share_low_level = j.value("share_low_level", c.share_low_level);
  if (j.contains("time_branch")) c.time = j.at("time_branch").get<TimeBranchConfig>();
}

}  // namespace adlr
