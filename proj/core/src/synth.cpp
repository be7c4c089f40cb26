// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/synth.hpp"

#include <cmath>
#include <cstdio>

#include "adlr/errors.hpp"
#include "adlr/ingest.hpp"
#include "adlr/rng.hpp"
#include "adlr/timeutil.hpp"

namespace adlr {

void SynthSpec::validate() const {
  if (n_days <= 0 || activities_per_day <= 0)
    throw UsageError("synth spec: n_days and activities_per_day must be positive");
  if (templates.empty()) throw UsageError("synth spec: no activity templates");
  if (transition.size() != templates.size())
    throw UsageError("synth spec: transition matrix must be square over templates");
  for (const auto& r : transition) {
    if (r.size() != templates.size())
      throw UsageError("synth spec: transition matrix must be square over templates");
    double sum = 0.0;
    for (double p : r) {
      if (p < 0.0) throw UsageError("synth spec: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw UsageError("synth spec: transition rows must sum to 1");
  }
  for (const auto& t : templates) {
    // Two events minimum so the begin and end markers are distinct lines.
    if (t.min_len < 2 || t.max_len < t.min_len)
      throw UsageError("synth spec: template '" + t.label +
                       "' needs 2 <= min_len <= max_len");
    if (t.hour_min < 0 || t.hour_max > 23 || t.hour_min > t.hour_max)
      throw UsageError("synth spec: template '" + t.label +
                       "' has an infeasible hour range");
    if (cycle_tokens.empty() &&
        t.body_tokens.empty() &&
        static_cast<size_t>(t.max_len) > t.lead_tokens.size())
      throw UsageError("synth spec: template '" + t.label +
                       "' has no body tokens to draw from");
  }
  if (other_rate < 0.0 || other_rate >= 1.0)
    throw UsageError("synth spec: other_rate must be in [0, 1)");
  if (other_rate > 0.0 && other_tokens.empty() && cycle_tokens.empty())
    throw UsageError("synth spec: other_rate > 0 requires other_tokens");
}

namespace {

const SensorChoice& draw_weighted(const std::vector<SensorChoice>& pool, Rng& rng) {
  double total = 0.0;
  for (const auto& c : pool) total += c.weight;
  double r = rng.uniform() * total;
  for (const auto& c : pool) {
    r -= c.weight;
    if (r < 0.0) return c;
  }
  return pool.back();
}

}  // namespace

std::string generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const Timestamp base = timestamp_from_civil(CivilTime{2026, 1, 5, 0, 0, 0, 0});
  int64_t cursor = base.micros;
  size_t cycle_pos = 0;
  size_t tmpl_idx = 0;

  auto pick = [&](const std::vector<SensorChoice>& pool,
                  const std::vector<SensorChoice>& leads,
                  size_t position) -> const SensorChoice& {
    if (!spec.cycle_tokens.empty())
      return spec.cycle_tokens[cycle_pos++ % spec.cycle_tokens.size()];
    if (position < leads.size()) return leads[position];
    return draw_weighted(pool, rng);
  };

  std::vector<SensorEvent> events;
  for (int day = 0; day < spec.n_days; ++day) {
    const int64_t day_base = base.micros + static_cast<int64_t>(day) * kMicrosPerDay;
    if (cursor < day_base) cursor = day_base;

    for (int k = 0; k < spec.activities_per_day; ++k) {
      const ActivityTemplate& t = spec.templates[tmpl_idx];

      const int hour =
          t.hour_min + static_cast<int>(rng.bounded(t.hour_max - t.hour_min + 1));
      int64_t start = day_base + static_cast<int64_t>(hour) * 3600 * kMicrosPerSecond +
                      static_cast<int64_t>(rng.bounded(60)) * 60 * kMicrosPerSecond +
                      static_cast<int64_t>(rng.bounded(60)) * kMicrosPerSecond;
      // Chronology wins over the hour window when the two conflict.
      if (start <= cursor)
        start = cursor + (1 + static_cast<int64_t>(rng.bounded(5))) * kMicrosPerSecond;
      cursor = start;

      const int len =
          t.min_len + static_cast<int>(rng.bounded(t.max_len - t.min_len + 1));
      for (int i = 0; i < len; ++i) {
        const SensorChoice& c = pick(t.body_tokens, t.lead_tokens, i);
        SensorEvent e;
        e.sensor_id = c.sensor_id;
        e.value = c.value;
        e.ts = Timestamp{cursor};
        if (i == 0)
          e.annotation = Annotation{t.label, Marker::Begin};
        else if (i == len - 1)
          e.annotation = Annotation{t.label, Marker::End};
        events.push_back(std::move(e));
        cursor += (1 + static_cast<int64_t>(rng.bounded(4))) * kMicrosPerSecond;
      }

      if (spec.other_rate > 0.0) {
        const double expected =
            len * spec.other_rate / (1.0 - spec.other_rate);
        int m = static_cast<int>(expected);
        if (rng.uniform() < expected - m) ++m;
        cursor += (10 + static_cast<int64_t>(rng.bounded(50))) * kMicrosPerSecond;
        for (int i = 0; i < m; ++i) {
          const SensorChoice& c = spec.cycle_tokens.empty()
                                      ? draw_weighted(spec.other_tokens, rng)
                                      : spec.cycle_tokens[cycle_pos++ %
                                                          spec.cycle_tokens.size()];
          SensorEvent e;
          e.sensor_id = c.sensor_id;
          e.value = c.value;
          e.ts = Timestamp{cursor};
          events.push_back(std::move(e));
          cursor += (2 + static_cast<int64_t>(rng.bounded(8))) * kMicrosPerSecond;
        }
      }

      cursor += (30 + static_cast<int64_t>(rng.bounded(270))) * kMicrosPerSecond;

      const auto& row = spec.transition[tmpl_idx];
      double r = rng.uniform();
      size_t next = row.size() - 1;
      for (size_t j = 0; j < row.size(); ++j) {
        r -= row[j];
        if (r < 0.0) {
          next = j;
          break;
        }
      }
      tmpl_idx = next;
    }
  }

  std::string out;
  for (const auto& e : events) {
    out += format_event(e);
    out += '\n';
  }
  return out;
}

// ----------------------------------------------------------- canned scenarios

namespace {

std::vector<SensorChoice> shared_noise_pool() {
  return {{"M001", "ON", 1.0},  {"M001", "OFF", 1.0}, {"M002", "ON", 1.0},
          {"M002", "OFF", 1.0}, {"M003", "ON", 1.0},  {"M003", "OFF", 1.0},
          {"D001", "OPEN", 0.5}, {"D001", "CLOSE", 0.5}};
}

std::vector<std::vector<double>> uniform_transitions(size_t n) {
  return std::vector<std::vector<double>>(
      n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

}  // namespace

SynthSpec scenario_separable() {
  SynthSpec spec;
  spec.seed = 1;
  spec.n_days = 70;  // 10 weeks
  spec.activities_per_day = 8;
  const char* labels[] = {"Cooking", "Reading", "Washing", "Walking"};
  const char* signature[] = {"M101", "M102", "M103", "M104"};
  for (int i = 0; i < 4; ++i) {
    ActivityTemplate t;
    t.label = labels[i];
    t.lead_tokens = {{signature[i], "ON", 1.0}};
    t.body_tokens = shared_noise_pool();
    t.body_tokens.push_back({signature[i], "ON", 1.5});
    t.body_tokens.push_back({signature[i], "OFF", 1.5});
    t.min_len = 6;
    t.max_len = 14;
    t.hour_min = 7;
    t.hour_max = 21;
    spec.templates.push_back(std::move(t));
  }
  spec.transition = uniform_transitions(4);
  return spec;
}

SynthSpec scenario_order_dependent() {
  SynthSpec spec;
  spec.seed = 2;
  spec.n_days = 56;  // 8 weeks
  spec.activities_per_day = 8;
  // Deterministic label cycle A -> B -> C -> D -> A. A and B share template
  // X (signature M201); C and D share template Y (signature M202). The
  // current observation alone cannot separate A from B (or C from D), but
  // the (previous, current) template pair identifies the label exactly:
  // A <- (Y, X), B <- (X, X), C <- (X, Y), D <- (Y, Y).
  //
  // The signature appears only as the lead event; the body is shared noise
  // of widely varying length. Per-sequence slots read their template off
  // the first event, while a flat concatenation of three sequences has to
  // locate segment starts before it can use them.
  auto make_template = [](const char* label, const char* sig) {
    ActivityTemplate t;
    t.label = label;
    t.lead_tokens = {{sig, "ON", 1.0}};
    t.body_tokens = shared_noise_pool();
    t.min_len = 8;
    t.max_len = 24;
    t.hour_min = 7;
    t.hour_max = 21;
    return t;
  };
  spec.templates.push_back(make_template("RoutineA", "M201"));
  spec.templates.push_back(make_template("RoutineB", "M201"));
  spec.templates.push_back(make_template("RoutineC", "M202"));
  spec.templates.push_back(make_template("RoutineD", "M202"));
  spec.transition = {{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}};
  return spec;
}

SynthSpec scenario_clock_dependent() {
  SynthSpec spec;
  spec.seed = 3;
  spec.n_days = 126;  // 18 weeks, one labeled occurrence per day
  spec.activities_per_day = 1;
  auto make_template = [](const char* label, int hour) {
    ActivityTemplate t;
    t.label = label;
    t.lead_tokens = {{"M301", "ON", 1.0}};
    t.body_tokens = shared_noise_pool();
    t.min_len = 6;
    t.max_len = 12;
    t.hour_min = hour;
    t.hour_max = hour;
    return t;
  };
  spec.templates.push_back(make_template("MorningRoutine", 8));
  spec.templates.push_back(make_template("EveningRoutine", 20));
  // Labels are i.i.d. fair coin flips, so predecessors carry no information.
  spec.transition = uniform_transitions(2);
  return spec;
}

SynthSpec scenario_cycle() {
  SynthSpec spec;
  spec.seed = 4;
  spec.n_days = 28;  // 4 weeks
  spec.activities_per_day = 8;
  for (int s = 1; s <= 8; ++s) {
    char name[8];
    std::snprintf(name, sizeof(name), "M%03d", s);
    spec.cycle_tokens.push_back({name, "ON", 1.0});
    spec.cycle_tokens.push_back({name, "OFF", 1.0});
  }
  ActivityTemplate t;
  t.label = "Routine";
  t.body_tokens = spec.cycle_tokens;  // unused in cycle mode
  // 32 events = two full 16-token rotations, so every sequence starts at
  // cycle phase 0 and any concatenation order preserves the deterministic
  // successor structure.
  t.min_len = 32;
  t.max_len = 32;
  t.hour_min = 6;
  t.hour_max = 21;
  spec.templates.push_back(std::move(t));
  spec.transition = {{1.0}};
  return spec;
}

std::map<std::string, SynthSpec> canned_scenarios() {
  return {{"separable", scenario_separable()},
          {"order-dependent", scenario_order_dependent()},
          {"clock-dependent", scenario_clock_dependent()},
          {"cycle", scenario_cycle()}};
}

}  // namespace adlr
