// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace adlr {

// Process exit codes shared between the library's error taxonomy and the CLI.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  data = 2,
  divergence = 3,
  verification = 4,
};

// Malformed or missing input artifacts (files, datasets, bundles).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or configuration supplied by the caller.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested verification pass (e.g. gradient checks) failed.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes; the message names the op and both shapes.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace adlr
