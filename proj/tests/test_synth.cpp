// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <adlr/ingest.hpp>
#include <adlr/synth.hpp>
#include <adlr/tokenize.hpp>

#include <set>

using namespace adlr;

namespace {

SynthSpec two_label_spec() {
  SynthSpec spec;
  spec.seed = 5;
  spec.n_days = 3;
  spec.activities_per_day = 4;
  ActivityTemplate a;
  a.label = "TaskA";
  a.body_tokens = {{"M001", "ON", 1.0}, {"M001", "OFF", 1.0}};
  a.min_len = 3;
  a.max_len = 5;
  ActivityTemplate b = a;
  b.label = "TaskB";
  b.body_tokens = {{"M002", "ON", 1.0}, {"M002", "OFF", 1.0}};
  spec.templates = {a, b};
  spec.transition = {{0.0, 1.0}, {1.0, 0.0}};  // strict alternation
  return spec;
}

}  // namespace

TEST_CASE("identical specs generate byte-identical logs") {
  auto spec = two_label_spec();
  CHECK(generate(spec) == generate(spec));
  auto other = spec;
  other.seed = 6;
  CHECK(generate(spec) != generate(other));
}

TEST_CASE("generated logs parse with zero warnings in every canned scenario") {
  for (const auto& [name, spec] : canned_scenarios()) {
    CAPTURE(name);
    auto parsed = parse_log_string(generate(spec));
    CHECK(parsed.warnings.empty());
    CHECK_FALSE(parsed.events.empty());
    for (size_t i = 1; i < parsed.events.size(); ++i)
      CHECK(parsed.events[i - 1].ts <= parsed.events[i].ts);
    auto segmented = segment_activities(parsed.events);
    CHECK(segmented.warnings.empty());
  }
}

TEST_CASE("other_rate zero yields no Other sequences, positive yields some") {
  auto spec = two_label_spec();
  auto segmented = segment_activities(parse_log_string(generate(spec)).events);
  for (const auto& s : segmented.sequences) CHECK(s.label != kOtherLabel);

  spec.other_rate = 0.3;
  spec.other_tokens = {{"M009", "ON", 1.0}};
  auto parsed = parse_log_string(generate(spec));
  auto with_other = segment_activities(parsed.events);
  CHECK(with_other.warnings.empty());
  size_t n_other = 0, total_events = 0;
  for (const auto& s : with_other.sequences) {
    if (s.label == kOtherLabel) ++n_other;
    total_events += s.events.size();
  }
  CHECK(n_other > 0);
  CHECK(total_events == parsed.events.size());
}

TEST_CASE("a forced alternation transition alternates labels exactly") {
  auto spec = two_label_spec();
  auto segmented = segment_activities(parse_log_string(generate(spec)).events);
  REQUIRE(segmented.sequences.size() == 12);  // 3 days x 4 activities
  // Hand-simulated chain: template 0 first, then strict swaps.
  for (size_t i = 0; i < segmented.sequences.size(); ++i)
    CHECK(segmented.sequences[i].label == (i % 2 == 0 ? "TaskA" : "TaskB"));
}

TEST_CASE("infeasible hour ranges are rejected") {
  auto spec = two_label_spec();
  spec.templates[0].hour_min = 14;
  spec.templates[0].hour_max = 9;
  CHECK_THROWS_AS(generate(spec), UsageError);
}

TEST_CASE("transition rows must be stochastic") {
  auto spec = two_label_spec();
  spec.transition[0] = {0.5, 0.4};
  CHECK_THROWS_AS(generate(spec), UsageError);
}

TEST_CASE("the cycle scenario produces a deterministic successor stream") {
  auto spec = scenario_cycle();
  auto segmented = segment_activities(parse_log_string(generate(spec)).events);
  auto vocab = build_vocab(segmented.sequences);
  CHECK(vocab.vocab_size() == 16);
  auto stream = corpus_stream(segmented.sequences, vocab);
  REQUIRE(stream.size() > 64);
  for (size_t i = 0; i + 1 < stream.size(); ++i)
    CHECK(stream[i + 1] == stream[i] % 16 + 1);
}

TEST_CASE("the clock scenario pins start hours to the label windows") {
  auto spec = scenario_clock_dependent();
  spec.n_days = 30;
  auto segmented = segment_activities(parse_log_string(generate(spec)).events);
  CHECK(segmented.sequences.size() == 30);
  std::set<std::string> seen;
  for (const auto& s : segmented.sequences) {
    seen.insert(s.label);
    const int hour = hour_of_day(s.start_ts);
    if (s.label == "MorningRoutine") CHECK(hour == 8);
    if (s.label == "EveningRoutine") CHECK(hour == 20);
  }
  CHECK(seen.size() == 2);
}

TEST_CASE("the order scenario emits the deterministic label cycle") {
  auto spec = scenario_order_dependent();
  spec.n_days = 2;
  auto segmented = segment_activities(parse_log_string(generate(spec)).events);
  REQUIRE(segmented.sequences.size() == 16);
  const char* expected[] = {"RoutineA", "RoutineB", "RoutineC", "RoutineD"};
  for (size_t i = 0; i < segmented.sequences.size(); ++i)
    CHECK(segmented.sequences[i].label == expected[i % 4]);
  // Paired labels share their observation template (signature sensor).
  auto sig_of = [](const ActivitySequence& s) {
    return s.events.front().sensor_id;
  };
  for (const auto& s : segmented.sequences) {
    if (s.label == "RoutineA" || s.label == "RoutineB")
      CHECK(sig_of(s) == "M201");
    else
      CHECK(sig_of(s) == "M202");
  }
}

TEST_CASE("canned scenarios cover the four named constructions") {
  auto scenarios = canned_scenarios();
  for (const char* name :
       {"separable", "order-dependent", "clock-dependent", "cycle"})
    CHECK(scenarios.contains(name));
}
