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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace madtls {

/// Ordered `label = hex` lines.
struct VectorFile {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string label, std::string value) { entries.emplace_back(std::move(label), std::move(value)); }
  std::optional<std::string> get(const std::string& label) const;
  std::string to_text() const;
  /// Throws ProtocolError on malformed lines.
  static VectorFile parse(const std::string& text);
};

/// Deterministic KDF outputs, session keys and a hop-by-hop record trace.
VectorFile generate_vectors(std::uint64_t seed);

struct VectorCheck {
  std::size_t checked = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty() && checked > 0; }
};

/// Recomputes every entry from the recorded seed and inputs.
VectorCheck replay_vectors(const VectorFile& file);

}  // namespace madtls
