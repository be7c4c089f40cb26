// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "adlr/errors.hpp"
#include "adlr/rng.hpp"

namespace adlr {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

std::optional<Marker> parse_marker(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "begin") return Marker::Begin;
  if (lower == "end") return Marker::End;
  return std::nullopt;
}

}  // namespace

ParseResult parse_log(std::istream& in) {
  ParseResult result;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;  // blank lines are not worth a warning
    if (fields.size() != 4 && fields.size() != 6) {
      result.warnings.push_back(
          {line_no, "expected 4 or 6 columns, got " + std::to_string(fields.size())});
      continue;
    }
    auto ts = parse_timestamp(fields[0], fields[1]);
    if (!ts) {
      result.warnings.push_back({line_no, "malformed timestamp"});
      continue;
    }
    SensorEvent e;
    e.sensor_id = std::string(fields[2]);
    e.value = std::string(fields[3]);
    e.ts = *ts;
    if (fields.size() == 6) {
      auto marker = parse_marker(fields[5]);
      if (!marker) {
        result.warnings.push_back(
            {line_no, "unknown activity marker '" + std::string(fields[5]) + "'"});
        continue;
      }
      e.annotation = Annotation{std::string(fields[4]), *marker};
    }
    result.events.push_back(std::move(e));
  }
  return result;
}

ParseResult parse_log_string(const std::string& text) {
  std::istringstream in(text);
  return parse_log(in);
}

ParseResult parse_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open log file: " + path);
  return parse_log(in);
}

std::string format_event(const SensorEvent& e) {
  std::string line = format_timestamp(e.ts);
  line += ' ';
  line += e.sensor_id;
  line += ' ';
  line += e.value;
  if (e.annotation) {
    line += ' ';
    line += e.annotation->activity;
    line += e.annotation->marker == Marker::Begin ? " begin" : " end";
  }
  return line;
}

namespace {

ActivitySequence finish_sequence(std::vector<SensorEvent> events, std::string label) {
  ActivitySequence s;
  s.start_ts = events.front().ts;
  s.end_ts = events.front().ts;
  for (const auto& e : events) s.end_ts = std::max(s.end_ts, e.ts);
  s.events = std::move(events);
  s.label = std::move(label);
  return s;
}

}  // namespace

SegmentResult segment_activities(const std::vector<SensorEvent>& events) {
  SegmentResult result;
  struct OpenSpan {
    std::string label;
    std::vector<SensorEvent> events;
  };
  std::vector<OpenSpan> stack;
  std::vector<SensorEvent> other_run;

  auto flush_other = [&] {
    if (!other_run.empty()) {
      result.sequences.push_back(finish_sequence(std::move(other_run), kOtherLabel));
      other_run.clear();
    }
  };

  for (size_t idx = 0; idx < events.size(); ++idx) {
    const SensorEvent& e = events[idx];
    if (e.annotation && e.annotation->marker == Marker::Begin) {
      flush_other();
      stack.push_back({e.annotation->activity, {}});
    }
    if (stack.empty()) {
      other_run.push_back(e);
    } else {
      stack.back().events.push_back(e);
    }
    if (e.annotation && e.annotation->marker == Marker::End) {
      const std::string& name = e.annotation->activity;
      auto it = std::find_if(stack.rbegin(), stack.rend(),
                             [&](const OpenSpan& s) { return s.label == name; });
      if (it == stack.rend()) {
        result.warnings.push_back(
            {idx + 1, "end marker for '" + name + "' without matching begin"});
      } else {
        OpenSpan closed = std::move(*it);
        stack.erase(std::next(it).base());
        // Events already collected by spans opened above the closed one stay
        // with those spans; only the closed span's own events are emitted.
        result.sequences.push_back(
            finish_sequence(std::move(closed.events), std::move(closed.label)));
      }
    }
  }
  for (auto& span : stack) {
    result.warnings.push_back(
        {events.size(), "begin marker for '" + span.label + "' never closed"});
    if (!span.events.empty())
      result.sequences.push_back(
          finish_sequence(std::move(span.events), std::move(span.label)));
  }
  flush_other();

  std::stable_sort(result.sequences.begin(), result.sequences.end(),
                   [](const ActivitySequence& a, const ActivitySequence& b) {
                     return a.end_ts < b.end_ts;
                   });
  return result;
}

DatasetSplit split_weeks(const std::vector<ActivitySequence>& sequences,
                         double train_ratio, uint64_t seed) {
  if (train_ratio <= 0.0 || train_ratio >= 1.0)
    throw UsageError("split_weeks: train_ratio must be in (0, 1)");
  if (sequences.empty()) throw DataError("split_weeks: no sequences");

  std::vector<ActivitySequence> ordered = sequences;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ActivitySequence& a, const ActivitySequence& b) {
                     return a.end_ts < b.end_ts;
                   });

  Timestamp anchor = midnight_of(ordered.front().events.front().ts);
  for (const auto& s : ordered)
    anchor = std::min(anchor, midnight_of(s.events.front().ts));

  std::map<int64_t, WeekBucket> buckets;
  for (auto& s : ordered) {
    int64_t w = week_index(s.end_ts, anchor);
    auto& bucket = buckets[w];
    bucket.week_index = w;
    bucket.sequences.push_back(std::move(s));
  }

  std::vector<WeekBucket> weeks;
  weeks.reserve(buckets.size());
  for (auto& [_, b] : buckets) weeks.push_back(std::move(b));
  if (weeks.size() < 2)
    throw DataError("split_weeks: need at least 2 weeks of data, have " +
                    std::to_string(weeks.size()));

  Rng rng(seed);
  rng.shuffle(weeks);

  const size_t n_train = static_cast<size_t>(
      train_ratio * static_cast<double>(weeks.size()));
  DatasetSplit split;
  split.seed = seed;
  split.train_weeks.assign(weeks.begin(), weeks.begin() + n_train);
  split.test_weeks.assign(weeks.begin() + n_train, weeks.end());
  return split;
}

std::vector<FoldSplit> kfold(const std::vector<WeekBucket>& weeks, int k,
                             uint64_t seed) {
  if (k < 2) throw UsageError("kfold: k must be >= 2");
  if (static_cast<size_t>(k) > weeks.size())
    throw DataError("kfold: k=" + std::to_string(k) + " exceeds " +
                    std::to_string(weeks.size()) + " weeks");

  std::vector<WeekBucket> shuffled = weeks;
  Rng rng(seed);
  rng.shuffle(shuffled);

  // Near-equal fold sizes; the first (n % k) folds get one extra week.
  const size_t n = shuffled.size();
  std::vector<std::vector<WeekBucket>> folds(k);
  size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    size_t len = n / k + (static_cast<size_t>(f) < n % k ? 1 : 0);
    folds[f].assign(shuffled.begin() + pos, shuffled.begin() + pos + len);
    pos += len;
  }

  std::vector<FoldSplit> rotations;
  rotations.reserve(k);
  for (int r = 0; r < k; ++r) {
    FoldSplit fs;
    fs.test = folds[r];
    std::vector<WeekBucket> rest;
    for (int f = 0; f < k; ++f)
      if (f != r) rest.insert(rest.end(), folds[f].begin(), folds[f].end());
    size_t n_val = std::max<size_t>(1, static_cast<size_t>(0.2 * rest.size()));
    fs.validation.assign(rest.end() - n_val, rest.end());
    fs.train.assign(rest.begin(), rest.end() - n_val);
    rotations.push_back(std::move(fs));
  }
  return rotations;
}

std::pair<std::vector<WeekBucket>, std::vector<WeekBucket>> split_validation_weeks(
    const std::vector<WeekBucket>& weeks, double fraction) {
  if (weeks.size() < 2)
    throw DataError("split_validation_weeks: need at least 2 weeks");
  size_t n_val = std::max<size_t>(
      1, static_cast<size_t>(fraction * static_cast<double>(weeks.size())));
  if (n_val >= weeks.size()) n_val = weeks.size() - 1;
  std::vector<WeekBucket> train(weeks.begin(), weeks.end() - n_val);
  std::vector<WeekBucket> val(weeks.end() - n_val, weeks.end());
  return {std::move(train), std::move(val)};
}

std::vector<ActivitySequence> sequences_chronological(
    const std::vector<WeekBucket>& weeks) {
  std::vector<ActivitySequence> out;
  for (const auto& w : weeks)
    out.insert(out.end(), w.sequences.begin(), w.sequences.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const ActivitySequence& a, const ActivitySequence& b) {
                     return a.end_ts < b.end_ts;
                   });
  return out;
}

// ------------------------------------------------------ segmented file I/O

namespace {

using nlohmann::json;

constexpr const char* kSegmentedFormat = "adlr-segmented";
constexpr int kSegmentedVersion = 1;

}  // namespace

void save_segmented(const std::string& path,
                    const std::vector<ActivitySequence>& sequences) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write segmented file: " + path);
  json header = {{"format", kSegmentedFormat},
                 {"version", kSegmentedVersion},
                 {"sequence_count", sequences.size()}};
  out << header.dump() << '\n';
  for (const auto& s : sequences) {
    json rec;
    rec["label"] = s.label;
    rec["start"] = format_timestamp(s.start_ts);
    rec["end"] = format_timestamp(s.end_ts);
    json events = json::array();
    for (const auto& e : s.events)
      events.push_back({e.sensor_id, e.value, format_timestamp(e.ts)});
    rec["events"] = std::move(events);
    out << rec.dump() << '\n';
  }
  if (!out) throw DataError("I/O failure writing " + path);
}

std::vector<ActivitySequence> load_segmented(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open segmented file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty segmented file: " + path);
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != kSegmentedFormat)
    throw DataError("not a segmented dataset file: " + path);
  if (header.value("version", 0) != kSegmentedVersion)
    throw DataError("unsupported segmented file version in " + path);

  std::vector<ActivitySequence> sequences;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded())
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed record");
    ActivitySequence s;
    s.label = rec.at("label").get<std::string>();
    for (const auto& ev : rec.at("events")) {
      SensorEvent e;
      e.sensor_id = ev.at(0).get<std::string>();
      e.value = ev.at(1).get<std::string>();
      const std::string ts_text = ev.at(2).get<std::string>();
      size_t space = ts_text.find(' ');
      auto ts = space == std::string::npos
                    ? std::nullopt
                    : parse_timestamp(std::string_view(ts_text).substr(0, space),
                                      std::string_view(ts_text).substr(space + 1));
      if (!ts)
        throw DataError(path + ":" + std::to_string(line_no) + ": bad timestamp");
      e.ts = *ts;
      s.events.push_back(std::move(e));
    }
    if (s.events.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty sequence");
    auto parse_span_ts = [&](const std::string& text) {
      size_t space = text.find(' ');
      std::optional<Timestamp> ts;
      if (space != std::string::npos)
        ts = parse_timestamp(std::string_view(text).substr(0, space),
                             std::string_view(text).substr(space + 1));
      if (!ts)
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": bad span timestamp");
      return *ts;
    };
    s.start_ts = parse_span_ts(rec.at("start").get<std::string>());
    s.end_ts = parse_span_ts(rec.at("end").get<std::string>());
    sequences.push_back(std::move(s));
  }
  return sequences;
}

}  // namespace adlr
