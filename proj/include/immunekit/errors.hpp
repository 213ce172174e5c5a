/* Copyright 2026 The ImmuneKit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef IMMUNEKIT_ERRORS_HPP_
#define IMMUNEKIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace immunekit {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or graph-wiring problems (mismatched dimensions, unreachable nodes).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced by a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// A model kind cannot do what was asked (e.g. differentiate through an
// evaluation-only attack).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// On-disk format violations (bad magic, wrong version, hash mismatch).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Truncated or syntactically invalid input.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Cross-field disagreement in otherwise well-formed input.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Caller misuse of an API (missing inputs, invalid argument combination).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Training failed to meet its contract (divergence, floor not reached).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// A metric whose denominator is empty. Never silently reported as zero.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Bad experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// I/O failures (unreadable / unwritable paths).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace immunekit

#endif  // IMMUNEKIT_ERRORS_HPP_
