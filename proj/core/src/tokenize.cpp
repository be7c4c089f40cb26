// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/tokenize.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "adlr/errors.hpp"

namespace adlr {

namespace {

const std::string kPadToken = "<PAD>";
const std::string kUnkToken = "<UNK>";
const std::string kSepToken = "<SEP>";

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> ranked_tokens,
                       std::vector<int64_t> counts)
    : ranked_(std::move(ranked_tokens)), counts_(std::move(counts)) {
  if (ranked_.size() != counts_.size())
    throw DataError("Vocabulary: token/count size mismatch");
  index_of_.reserve(ranked_.size());
  for (size_t i = 0; i < ranked_.size(); ++i)
    index_of_.emplace(ranked_[i], static_cast<int>(i) + 1);
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_of_.find(token);
  return it == index_of_.end() ? unk_index() : it->second;
}

const std::string& Vocabulary::token_of(int index) const {
  if (index == kPadIndex) return kPadToken;
  if (index == unk_index()) return kUnkToken;
  if (index == sep_index()) return kSepToken;
  if (index < 1 || index > vocab_size())
    throw DataError("Vocabulary::token_of: index " + std::to_string(index) +
                    " out of range");
  return ranked_[index - 1];
}

std::string event_token(const SensorEvent& e) { return e.sensor_id + e.value; }

Vocabulary build_vocab(const std::vector<ActivitySequence>& corpus) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");

  struct Entry {
    int64_t count = 0;
    size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> table;
  size_t position = 0;
  for (const auto& s : corpus) {
    for (const auto& e : s.events) {
      auto [it, inserted] = table.emplace(event_token(e), Entry{});
      if (inserted) it->second.first_seen = position;
      ++it->second.count;
      ++position;
    }
  }
  if (table.empty()) throw DataError("build_vocab: corpus has no events");

  std::vector<std::pair<std::string, Entry>> entries(table.begin(), table.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });

  std::vector<std::string> tokens;
  std::vector<int64_t> counts;
  tokens.reserve(entries.size());
  counts.reserve(entries.size());
  for (auto& [tok, entry] : entries) {
    tokens.push_back(std::move(tok));
    counts.push_back(entry.count);
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

LabelRegistry::LabelRegistry(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  names_ = std::move(names);
  for (size_t i = 0; i < names_.size(); ++i)
    ids_.emplace(names_[i], static_cast<int>(i));
}

LabelRegistry LabelRegistry::from_sequences(
    const std::vector<ActivitySequence>& seqs) {
  std::vector<std::string> names;
  names.reserve(seqs.size());
  for (const auto& s : seqs) names.push_back(s.label);
  return LabelRegistry(std::move(names));
}

int LabelRegistry::id_of(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw DataError("unknown activity label: " + name);
  return it->second;
}

TokenizedSequence encode(const ActivitySequence& s, const Vocabulary& vocab,
                         const LabelRegistry& labels) {
  TokenizedSequence out;
  out.token_ids.reserve(s.events.size());
  out.hour_ids.reserve(s.events.size());
  for (const auto& e : s.events) {
    out.token_ids.push_back(vocab.lookup(event_token(e)));
    out.hour_ids.push_back(hour_of_day(e.ts));
  }
  out.source_label = s.label;
  out.label_id = labels.id_of(s.label);
  return out;
}

std::vector<int> corpus_stream(const std::vector<ActivitySequence>& sequences,
                               const Vocabulary& vocab) {
  std::vector<int> stream;
  for (const auto& s : sequences)
    for (const auto& e : s.events) stream.push_back(vocab.lookup(event_token(e)));
  return stream;
}

// ---------------------------------------------------------------- file I/O

namespace {

using nlohmann::json;

constexpr const char* kVocabFormat = "adlr-vocab";
constexpr int kVocabVersion = 1;

}  // namespace

void save_vocab(const std::string& path, const Vocabulary& vocab) {
  json doc;
  doc["format"] = kVocabFormat;
  doc["version"] = kVocabVersion;
  doc["pad_index"] = Vocabulary::kPadIndex;
  doc["unk_index"] = vocab.unk_index();
  doc["sep_index"] = vocab.sep_index();
  json tokens = json::array();
  for (int i = 1; i <= vocab.vocab_size(); ++i)
    tokens.push_back({{"token", vocab.token_of(i)},
                      {"index", i},
                      {"count", vocab.count_of(i)}});
  doc["tokens"] = std::move(tokens);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  out << doc.dump(2) << '\n';
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || doc.value("format", "") != kVocabFormat)
    throw DataError("not a vocabulary file: " + path);
  if (doc.value("version", 0) != kVocabVersion)
    throw DataError("unsupported vocabulary version in " + path);
  std::vector<std::string> tokens;
  std::vector<int64_t> counts;
  int expected = 1;
  for (const auto& t : doc.at("tokens")) {
    if (t.at("index").get<int>() != expected)
      throw DataError("vocabulary indices must be contiguous from 1 in " + path);
    tokens.push_back(t.at("token").get<std::string>());
    counts.push_back(t.at("count").get<int64_t>());
    ++expected;
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

}  // namespace adlr
