// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic smart-home log generator. Emits CASAS-format text
// (the exact format `ingest` consumes) from a seeded spec: per-activity
// token templates, a row-stochastic label transition matrix, hour windows,
// and interstitial unlabeled events. Canned scenarios construct datasets
// whose optimal decision rules are known analytically, so classifier claims
// can be verified against provable bounds.

#pragma once

#include <cstdint>

#include "adlr/errors.hpp"
#include <map>
#include <string>
#include <vector>

namespace adlr {

struct SensorChoice {
  std::string sensor_id;
  std::string value;
  double weight = 1.0;
};

struct ActivityTemplate {
  std::string label;
  // First events of every occurrence, emitted in order (deterministic
  // signature); may be empty.
  std::vector<SensorChoice> lead_tokens;
  // Weighted pool for the remaining events.
  std::vector<SensorChoice> body_tokens;
  int min_len = 5;   // total events including leads
  int max_len = 12;
  int hour_min = 0;  // inclusive window for the occurrence start hour
  int hour_max = 23;
};

struct SynthSpec {
  uint64_t seed = 0;
  int n_days = 28;
  int activities_per_day = 6;
  std::vector<ActivityTemplate> templates;
  // Row-stochastic over templates; row i gives the distribution of the next
  // template after an occurrence of template i. The first occurrence uses
  // template 0.
  std::vector<std::vector<double>> transition;
  // Fraction of all events that are interstitial and unlabeled; they are
  // drawn from other_tokens and appear between activities.
  double other_rate = 0.0;
  std::vector<SensorChoice> other_tokens;
  // When non-empty, every emitted event takes the next entry of this list in
  // rotation instead of a template draw (deterministic next-token corpus).
  std::vector<SensorChoice> cycle_tokens;

  void validate() const;
};

// Chronological CASAS log text; byte-identical for identical specs.
std::string generate(const SynthSpec& spec);

// Named scenario specs:
//   separable       — every class carries a unique signature token; a
//                     context-free frequency rule scores a perfect F1.
//   order-dependent — labels follow a deterministic 4-cycle whose
//                     observation templates collide pairwise, so any
//                     context-free classifier is capped at macro-F1 1/3
//                     while (previous, current) observations identify the
//                     label exactly.
//   clock-dependent — two classes with identical templates and i.i.d.
//                     labels, distinguished only by start hour (8 vs 20);
//                     one occurrence per day so predecessors carry nothing.
//   cycle           — token i is always followed by i+1 mod V; ideal
//                     perplexity 1.
SynthSpec scenario_separable();
SynthSpec scenario_order_dependent();
SynthSpec scenario_clock_dependent();
SynthSpec scenario_cycle();

std::map<std::string, SynthSpec> canned_scenarios();

}  // namespace adlr
