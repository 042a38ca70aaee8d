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
#include <map>
#include <string>
#include <vector>

#include "madtls/scenario.hpp"

namespace madtls::sim {

struct HopTrace {
  std::string entity;
  std::size_t link = 0;  // link the datagram arrived on
  Bytes in;
  Bytes out;
  std::map<std::size_t, BitString> view;
  PartialTag tag;
  std::optional<bool> self_verified;
  std::string verdict;
  PrimitiveCounts cost;
};

struct ItemReport {
  std::size_t index = 0;
  std::string kind;
  Expectation expected;
  std::string actual;
  bool matched = false;
  std::string detail;
  std::size_t wire_bytes = 0;
  std::size_t plain_dtls_bytes = 0;
  bool template_referenced = false;
  std::size_t self_verify_tags = 0;
  std::size_t oracle_mismatches = 0;
  std::vector<HopTrace> hops;
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string transport;
  bool handshake_established = false;
  int handshake_flights = 0;
  std::string handshake_failure;
  std::vector<ItemReport> items;
  std::map<std::string, double> metrics;
  std::vector<std::string> violations;  // failed analysis checks

  std::size_t mismatches() const;
  bool passed() const { return handshake_established && mismatches() == 0 && violations.empty(); }
};

RunReport run_scenario(const Scenario& scenario);

std::string to_text(const RunReport& report);
/// Machine-readable summary of several runs.
std::string to_json(const std::vector<RunReport>& reports, bool with_traces);

}  // namespace madtls::sim
