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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "madtls/access.hpp"
#include "madtls/session.hpp"

namespace madtls::sim {

enum class TransportKind : std::uint8_t { memory, datagram };

enum class AttackAction : std::uint8_t {
  flip_bits,
  revert,
  reorder_hops,
  skip_hop,
  drop,
  rogue_write,
  collude,
};
const char* to_string(AttackAction action);

enum class FlipTarget : std::uint8_t { ciphertext, tag, wire };

struct Attack {
  AttackAction action = AttackAction::flip_bits;
  /// Link index: 0 leaves the originator, the last link enters the receiver.
  std::size_t position = 0;
  FlipTarget target = FlipTarget::ciphertext;
  std::vector<std::size_t> bits;
  std::vector<std::string> hops;  // reorder: two names, skip: one
  std::string middlebox;          // rogue_write, collude (first colluder)
  std::string partner;            // collude (reverting colluder)
  std::size_t segment = 0;
  BitString value;                // rogue_write / collude replacement plaintext
};

struct Expectation {
  enum class Kind : std::uint8_t { accept, reject_at_receiver, reject_at_middlebox, dropped, reject_at_injector };
  Kind kind = Kind::accept;
  std::string middlebox;

  static Expectation parse(const std::string& text);
  std::string to_string() const;
  friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct Edit {
  std::string middlebox;
  std::size_t segment = 0;
  BitString value;
};

/// One traffic item: a sender record, an injection, a replay of an earlier
/// item's datagram, or an outsider forgery.
struct TrafficItem {
  enum class Kind : std::uint8_t { send, inject, replay, forge };
  Kind kind = Kind::send;

  BitString plaintext;
  std::optional<std::uint8_t> template_id;
  std::optional<SegmentationInfo> layout;
  std::vector<Edit> edits;
  std::vector<Attack> attacks;
  Expectation expect;
  std::map<std::string, std::vector<std::size_t>> expect_view;
  std::string flow;

  // inject
  std::uint8_t injection_template = 0;
  std::uint64_t sequence = 0;
  SegmentEdits values;

  // replay / forge
  std::size_t replay_of = 0;
  std::size_t position = 0;
  std::uint8_t content_type = content_type::kRecord;
};

struct InjectionTemplateSpec {
  std::uint8_t id = 0;
  std::string middlebox;
  SegmentationInfo layout;
  std::vector<bool> placeholder;
  BitString fixed;
  std::uint64_t first_sequence = 0;
  std::size_t count = 1;
};

struct MiddleboxSpec {
  MiddleboxInfo info;
  SelfVerifyPolicy policy = SelfVerifyPolicy::drop_and_report;
};

struct BlindedCheck {
  std::string middlebox;
  double min_fraction = 0.0;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  TransportKind transport = TransportKind::memory;
  double drop_rate = 0.0;
  bool oracle = false;
  std::vector<MiddleboxSpec> middleboxes;
  std::vector<std::string> context_names;
  SessionConfig config;
  std::vector<InjectionTemplateSpec> injection_templates;
  std::vector<TrafficItem> traffic;
  std::optional<BlindedCheck> blinded;

  std::optional<std::size_t> middlebox_index(const std::string& name) const;
  /// Throws ScenarioError listing every violation.
  void validate() const;
};

struct RandomSessionParams {
  std::size_t count = 100;
  std::uint64_t seed = 1;
  std::size_t max_entities = 6;
  std::size_t max_contexts = 5;
  std::size_t max_segments = 6;
  std::size_t messages = 1;
};

/// Honest sessions with random topology, rights, layouts and writer edits.
std::vector<Scenario> random_sessions(const RandomSessionParams& params);

/// A file holds one scenario, a `scenarios` pack, or a `generate` directive.
std::vector<Scenario> parse_scenarios(const std::string& yaml_text);
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);

}  // namespace madtls::sim
