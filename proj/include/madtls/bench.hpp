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
#include <string>
#include <vector>

namespace madtls {

struct BenchRow {
  std::size_t contexts = 0;
  std::size_t context_bytes = 0;
  std::string access;  // "read" or "write"
  std::uint64_t mac_calls = 0;       // one middlebox hop
  std::uint64_t endpoint_mac_calls = 0;  // sender plus receiver
  double mean_us = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<std::string> failures;  // violated call-count identities
};

/// One middlebox with read or write access to `contexts` contexts of
/// `context_bytes` each; times are measured, call counts are checked.
BenchResult run_bench(const std::vector<std::size_t>& context_bytes, const std::vector<std::size_t>& contexts,
                      std::size_t reps, std::uint64_t seed);

}  // namespace madtls
