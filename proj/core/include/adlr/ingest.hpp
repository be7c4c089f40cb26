// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// CASAS event-log ingestion: line parsing, begin/end span segmentation into
// labeled activity sequences (with interstitial "Other" runs), deterministic
// weekly train/test splits, and k-fold partitioning of week buckets.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adlr/errors.hpp"
#include "adlr/timeutil.hpp"

namespace adlr {

inline constexpr const char* kOtherLabel = "Other";

enum class Marker { Begin, End };

struct Annotation {
  std::string activity;
  Marker marker = Marker::Begin;
  bool operator==(const Annotation&) const = default;
};

struct SensorEvent {
  std::string sensor_id;
  std::string value;  // verbatim text from the log
  Timestamp ts;
  std::optional<Annotation> annotation;
  bool operator==(const SensorEvent&) const = default;
};

struct ParseWarning {
  size_t line_no = 0;  // 1-based
  std::string message;
};

struct ActivitySequence {
  std::vector<SensorEvent> events;
  std::string label;
  Timestamp start_ts;
  Timestamp end_ts;
};

struct ParseResult {
  std::vector<SensorEvent> events;
  std::vector<ParseWarning> warnings;
};

// Parses whitespace-separated columns `DATE TIME SENSOR VALUE [ACTIVITY
// MARKER]`, markers `begin`/`end` case-insensitive. Malformed lines are
// skipped and reported; empty input yields an empty event list.
ParseResult parse_log(std::istream& in);
ParseResult parse_log_string(const std::string& text);
ParseResult parse_log_file(const std::string& path);  // DataError on I/O failure

// One log line (no trailing newline); parse_log(format_event(e)) == e.
std::string format_event(const SensorEvent& e);

struct SegmentResult {
  std::vector<ActivitySequence> sequences;  // ordered by end_ts
  std::vector<ParseWarning> warnings;       // unmatched begin/end annotations
};

// Assigns every event to exactly one sequence. Overlapping spans resolve by
// a stack: an event belongs to the most recently opened span that is still
// open when the event arrives (a Begin opens before its event is assigned, an
// End closes after). Events outside all spans form "Other" runs.
SegmentResult segment_activities(const std::vector<SensorEvent>& events);

struct WeekBucket {
  int64_t week_index = 0;
  std::vector<ActivitySequence> sequences;  // end_ts order
};

struct DatasetSplit {
  std::vector<WeekBucket> train_weeks;  // permutation order
  std::vector<WeekBucket> test_weeks;
  uint64_t seed = 0;
};

// Buckets sequences by end_ts into 7-day windows anchored at midnight of the
// first event's date, shuffles the non-empty buckets with Rng(seed), and
// assigns the first floor(train_ratio * n) to train. Throws DataError when
// the data spans fewer than two non-empty weeks.
DatasetSplit split_weeks(const std::vector<ActivitySequence>& sequences,
                         double train_ratio, uint64_t seed);

struct FoldSplit {
  std::vector<WeekBucket> train;
  std::vector<WeekBucket> validation;
  std::vector<WeekBucket> test;
};

// Shuffles weeks with Rng(seed) and partitions them into k near-equal folds.
// Rotation r uses fold r as the phase-test set; of the remaining weeks the
// trailing max(1, floor(0.2 * m)) become validation.
std::vector<FoldSplit> kfold(const std::vector<WeekBucket>& weeks, int k,
                             uint64_t seed);

// Splits off the trailing max(1, floor(fraction * n)) buckets as validation.
// Used for the classifier train/validation earmark.
std::pair<std::vector<WeekBucket>, std::vector<WeekBucket>> split_validation_weeks(
    const std::vector<WeekBucket>& weeks, double fraction);

// All sequences of the given buckets, sorted chronologically by end_ts.
std::vector<ActivitySequence> sequences_chronological(
    const std::vector<WeekBucket>& weeks);

// Segmented-dataset file: line-delimited JSON with a version header record.
void save_segmented(const std::string& path,
                    const std::vector<ActivitySequence>& sequences);
std::vector<ActivitySequence> load_segmented(const std::string& path);

}  // namespace adlr
