/*
 * Copyright 2026 The madtls Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace madtls {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid session configuration: missing keys, bad rights, oversized tables.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent wire data.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Record whose content type is not ours. DTLS silently discards these.
class IgnoredRecord : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class AccessViolation : public Error {
 public:
  using Error::Error;
};

class ReplayError : public Error {
 public:
  using Error::Error;
};

class HandshakeFailure : public Error {
 public:
  using Error::Error;
};

/// Scenario validation failure carrying every violation found.
class ScenarioError : public Error {
 public:
  explicit ScenarioError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

}  // namespace madtls
