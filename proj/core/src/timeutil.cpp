// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/timeutil.hpp"

#include <charconv>
#include <cstdio>

namespace adlr {

namespace {

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t floor_mod(int64_t a, int64_t b) { return a - floor_div(a, b) * b; }

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

// Howard Hinnant's civil-date algorithms.
int64_t days_from_civil(int year, int month, int day) {
  year -= month <= 2;
  const int64_t era = floor_div(year, 400);
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy =
      (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2) / 5 +
      static_cast<unsigned>(day) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

static void civil_from_days(int64_t days, int& year, int& month, int& day) {
  days += 719468;
  const int64_t era = floor_div(days, 146097);
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

CivilTime civil_from_timestamp(Timestamp ts) {
  CivilTime ct;
  const int64_t days = floor_div(ts.micros, kMicrosPerDay);
  int64_t rem = floor_mod(ts.micros, kMicrosPerDay);
  civil_from_days(days, ct.year, ct.month, ct.day);
  ct.micros = static_cast<int>(rem % kMicrosPerSecond);
  int64_t secs = rem / kMicrosPerSecond;
  ct.hour = static_cast<int>(secs / 3600);
  ct.minute = static_cast<int>((secs / 60) % 60);
  ct.second = static_cast<int>(secs % 60);
  return ct;
}

Timestamp timestamp_from_civil(const CivilTime& ct) {
  int64_t days = days_from_civil(ct.year, ct.month, ct.day);
  int64_t micros = days * kMicrosPerDay +
                   (static_cast<int64_t>(ct.hour) * 3600 +
                    static_cast<int64_t>(ct.minute) * 60 + ct.second) *
                       kMicrosPerSecond +
                   ct.micros;
  return Timestamp{micros};
}

std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time) {
  CivilTime ct;
  // Date: YYYY-MM-DD
  if (date.size() < 8) return std::nullopt;
  size_t d1 = date.find('-');
  if (d1 == std::string_view::npos) return std::nullopt;
  size_t d2 = date.find('-', d1 + 1);
  if (d2 == std::string_view::npos) return std::nullopt;
  if (!parse_int(date.substr(0, d1), ct.year) ||
      !parse_int(date.substr(d1 + 1, d2 - d1 - 1), ct.month) ||
      !parse_int(date.substr(d2 + 1), ct.day))
    return std::nullopt;
  if (ct.month < 1 || ct.month > 12 || ct.day < 1 || ct.day > 31) return std::nullopt;

  // Time: HH:MM:SS with an optional fractional part of 1..6 digits.
  std::string_view frac;
  if (size_t dot = time.find('.'); dot != std::string_view::npos) {
    frac = time.substr(dot + 1);
    time = time.substr(0, dot);
  }
  size_t c1 = time.find(':');
  if (c1 == std::string_view::npos) return std::nullopt;
  size_t c2 = time.find(':', c1 + 1);
  if (c2 == std::string_view::npos) return std::nullopt;
  if (!parse_int(time.substr(0, c1), ct.hour) ||
      !parse_int(time.substr(c1 + 1, c2 - c1 - 1), ct.minute) ||
      !parse_int(time.substr(c2 + 1), ct.second))
    return std::nullopt;
  if (ct.hour < 0 || ct.hour > 23 || ct.minute < 0 || ct.minute > 59 ||
      ct.second < 0 || ct.second > 60)
    return std::nullopt;

  if (!frac.empty()) {
    if (frac.size() > 6) frac = frac.substr(0, 6);
    int value = 0;
    if (!parse_int(frac, value) || value < 0) return std::nullopt;
    for (size_t i = frac.size(); i < 6; ++i) value *= 10;
    ct.micros = value;
  }
  return timestamp_from_civil(ct);
}

std::string format_timestamp(Timestamp ts) {
  CivilTime ct = civil_from_timestamp(ts);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d.%06d", ct.year,
                ct.month, ct.day, ct.hour, ct.minute, ct.second, ct.micros);
  return buf;
}

int hour_of_day(Timestamp ts) {
  return static_cast<int>(floor_mod(ts.micros, kMicrosPerDay) /
                          (3600 * kMicrosPerSecond));
}

Timestamp midnight_of(Timestamp ts) {
  return Timestamp{floor_div(ts.micros, kMicrosPerDay) * kMicrosPerDay};
}

int64_t week_index(Timestamp ts, Timestamp anchor) {
  return floor_div(ts.micros - anchor.micros, kMicrosPerWeek);
}

}  // namespace adlr
