// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sensor-event tokenization: frequency-ranked vocabulary over sensorId+value
// strings, hour-of-day extraction, label registry, and the flat token stream
// used for decoder pretraining.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "adlr/ingest.hpp"

namespace adlr {

// Frequency-ranked token map. Index 0 is reserved for padding; ranked tokens
// occupy 1..V (higher count -> lower index, ties by first occurrence in the
// build corpus); V+1 is the unknown index; V+2 is reserved for the <SEP>
// separator used by extended-context classifiers.
class Vocabulary {
 public:
  static constexpr int kPadIndex = 0;

  Vocabulary() = default;
  Vocabulary(std::vector<std::string> ranked_tokens, std::vector<int64_t> counts);

  int vocab_size() const { return static_cast<int>(ranked_.size()); }  // V
  int unk_index() const { return vocab_size() + 1; }
  int sep_index() const { return vocab_size() + 2; }
  // Number of distinct indices a model table must cover: pad + ranked + unk + sep.
  int total_indices() const { return vocab_size() + 3; }

  // Ranked index of `token`, or unk_index() when absent.
  int lookup(const std::string& token) const;

  // Token string for a ranked index 1..V. Pad/unk/sep render as "<PAD>",
  // "<UNK>", "<SEP>".
  const std::string& token_of(int index) const;

  int64_t count_of(int index) const { return counts_[index - 1]; }
  const std::vector<std::string>& ranked_tokens() const { return ranked_; }

 private:
  std::vector<std::string> ranked_;  // index i-1 holds token with index i
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int> index_of_;
};

// Concatenation of sensor_id and verbatim value; the timestamp is excluded.
std::string event_token(const SensorEvent& e);

// Builds the ranked vocabulary from a training corpus. Throws DataError on
// an empty corpus.
Vocabulary build_vocab(const std::vector<ActivitySequence>& corpus);

// Deterministic activity-label <-> class-id map, alphabetical by name.
class LabelRegistry {
 public:
  LabelRegistry() = default;
  explicit LabelRegistry(std::vector<std::string> names);  // sorted + deduped

  static LabelRegistry from_sequences(const std::vector<ActivitySequence>& seqs);

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  int id_of(const std::string& name) const;  // DataError when unknown
  const std::string& name_of(int id) const { return names_[id]; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

struct TokenizedSequence {
  std::vector<int> token_ids;
  std::vector<int> hour_ids;  // 0..23, aligned with token_ids
  int label_id = -1;
  std::string source_label;
};

TokenizedSequence encode(const ActivitySequence& s, const Vocabulary& vocab,
                         const LabelRegistry& labels);

// Flat token-id stream across sequence boundaries, in the order given
// (callers pass chronologically ordered sequences).
std::vector<int> corpus_stream(const std::vector<ActivitySequence>& sequences,
                               const Vocabulary& vocab);

// Vocabulary file: JSON with format/version fields, pad/unk/sep indices, and
// the ranked (token, index, count) list.
void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

}  // namespace adlr
