// Copyright 2026 The bqec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bqec {

/// Raised for operator/state dimensions that do not fit the requested operation.
struct InvalidDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite input, loss of trace, norm underflow and similar numerical breakdowns.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, step sizes or configuration keys.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Collects non-fatal diagnostics (truncation tails, positivity projection, ...).
// A null sink means "print to std::clog".
struct Warnings {
  std::vector<std::string> messages;

  void add(std::string msg) { messages.push_back(std::move(msg)); }
  bool empty() const { return messages.empty(); }
};

inline void warn(Warnings* sink, std::string msg) {
  if (sink) {
    sink->add(std::move(msg));
  } else {
    std::clog << "warning: " << msg << '\n';
  }
}

}  // namespace bqec
