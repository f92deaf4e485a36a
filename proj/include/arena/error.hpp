// Copyright 2026 The Arena Authors.
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

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace arena {

// Root of the library's error hierarchy. Numeric domain violations (e.g. a
// non-positive strength passed to prob_win) use std::domain_error instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input. Maps to CLI exit code 2 and HTTP 422.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Request conflicts with recorded state (duplicate judgment, wrong pair).
class ConflictError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Optimizer failed to converge where convergence is required. Exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File-system or stream failure. Exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

// An event log that cannot be replayed. Carries the sequence number of the
// last event that was accepted.
class CorruptLogError : public ValidationError {
 public:
  CorruptLogError(long long last_valid_seq, const std::string& what)
      : ValidationError("event log corrupt after seq " +
                        std::to_string(last_valid_seq) + ": " + what),
        last_valid_seq_(last_valid_seq) {}

  long long last_valid_seq() const { return last_valid_seq_; }

 private:
  long long last_valid_seq_;
};

// The comparison graph of one metric has more than one connected component,
// so relative strengths across components are unidentifiable.
class DisconnectedGraphError : public ValidationError {
 public:
  DisconnectedGraphError(std::string metric,
                         std::vector<std::vector<std::string>> components)
      : ValidationError(Describe(metric, components)),
        metric_(std::move(metric)),
        components_(std::move(components)) {}

  const std::string& metric() const { return metric_; }
  const std::vector<std::vector<std::string>>& components() const {
    return components_;
  }

 private:
  static std::string Describe(
      const std::string& metric,
      const std::vector<std::vector<std::string>>& components) {
    std::string out = "comparison graph for metric '" + metric +
                      "' is disconnected; components:";
    for (const auto& component : components) {
      out += " {";
      for (std::size_t i = 0; i < component.size(); ++i) {
        if (i > 0) out += ",";
        out += component[i];
      }
      out += "}";
    }
    return out;
  }

  std::string metric_;
  std::vector<std::vector<std::string>> components_;
};

}  // namespace arena
