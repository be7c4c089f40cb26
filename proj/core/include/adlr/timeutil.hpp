// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace adlr {

// Naive local timestamp with microsecond resolution, counted from
// 1970-01-01 00:00:00. No time zones, no leap seconds.
struct Timestamp {
  int64_t micros = 0;
  auto operator<=>(const Timestamp&) const = default;
};

inline constexpr int64_t kMicrosPerSecond = 1'000'000;
inline constexpr int64_t kMicrosPerDay = 86'400 * kMicrosPerSecond;
inline constexpr int64_t kMicrosPerWeek = 7 * kMicrosPerDay;

struct CivilTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
  int micros = 0;  // 0..999999
};

// Days since 1970-01-01 for a proleptic Gregorian civil date.
int64_t days_from_civil(int year, int month, int day);

CivilTime civil_from_timestamp(Timestamp ts);
Timestamp timestamp_from_civil(const CivilTime& ct);

// Parses "YYYY-MM-DD" and "HH:MM:SS[.frac]" column pair; nullopt when malformed.
std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time);

// "YYYY-MM-DD HH:MM:SS.ffffff" (always six fractional digits).
std::string format_timestamp(Timestamp ts);

int hour_of_day(Timestamp ts);  // 0..23

// Midnight of the calendar day containing ts.
Timestamp midnight_of(Timestamp ts);

// Index of the 7-day window containing ts, for windows anchored at `anchor`.
int64_t week_index(Timestamp ts, Timestamp anchor);

}  // namespace adlr
