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
#include <set>
#include <vector>

#include "madtls/session.hpp"

namespace madtls::injection {

/// Regular epochs count up from 1; injection epochs are handed out from the
/// top of the 16-bit space, one per (middlebox, template).
class EpochAllocator {
 public:
  std::uint16_t current_regular() const { return regular_; }
  std::uint16_t next_regular();
  std::uint16_t allocate(EntityId middlebox, std::uint8_t template_id);
  bool is_injection(std::uint16_t epoch) const;

 private:
  std::uint16_t regular_ = 1;
  std::uint16_t next_injection_ = 0xFFFF;
  std::map<std::pair<std::uint8_t, std::uint8_t>, std::uint16_t> assigned_;
};

/// Ciphertext skeleton and tag issued for one sequence number. Placeholders
/// hold the encryption of zero bits.
struct PreIssued {
  std::uint64_t sequence = 0;
  BitString ciphertext;
  PartialTag base_tag;
  friend bool operator==(const PreIssued&, const PreIssued&) = default;
};

struct MessageTemplate {
  std::uint8_t template_id = 0;
  SegmentationInfo layout;
  std::vector<bool> placeholder;  // per segment
  EntityId issuer;
  EntityId injector;
  std::uint16_t epoch = 0;
  std::map<std::uint64_t, PreIssued> issued;

  std::uint64_t highest_sequence() const;
  friend bool operator==(const MessageTemplate&, const MessageTemplate&) = default;
};

struct InjectionBudget {
  EntityId middlebox;
  std::uint8_t template_id = 0;
  std::uint64_t highest = 0;
  std::set<std::uint64_t> consumed;
};

/// Endpoint side: authenticates templates and pre-issues tags.
class Issuer {
 public:
  Issuer(const SessionKeys& keys, EpochAllocator& epochs);

  /// `fixed` has the template's full length; placeholder bits are ignored.
  MessageTemplate issue(std::uint8_t template_id, const SegmentationInfo& layout, std::vector<bool> placeholder,
                        const BitString& fixed, EntityId injector, std::uint64_t first_sequence, std::size_t count);
  /// Issues `count` further sequences; returns only the new entries.
  std::vector<PreIssued> extend(MessageTemplate& tmpl, std::size_t count);
  /// Issues an explicit range; overlapping an issued range is rejected.
  std::vector<PreIssued> issue_range(MessageTemplate& tmpl, std::uint64_t first_sequence, std::size_t count);

  /// Tag-stream record (content type 0x1D) for the injector, sealed under its
  /// key-distribution key. The template description is included when
  /// `with_template` is set.
  Bytes tag_stream(const MessageTemplate& tmpl, const std::vector<PreIssued>& entries, bool with_template);

 private:
  PreIssued issue_one(const MessageTemplate& tmpl, std::uint64_t sequence) const;

  const SessionKeys& keys_;
  EpochAllocator& epochs_;
  std::map<std::uint8_t, BitString> fixed_;
  std::uint64_t stream_sequence_ = 0;
};

/// Middlebox side: consumes pre-issued tags.
class Injector {
 public:
  Injector(const SessionKeys& keys, EntityId self, MacKey kd_key);

  /// Opens a 0x1D record; throws ProtocolError if it does not authenticate.
  void accept_tag_stream(std::span<const std::uint8_t> wire);

  ProtectedRecord inject(std::uint8_t template_id, std::uint64_t sequence, const SegmentEdits& placeholder_values);

  const MessageTemplate* find(std::uint8_t template_id) const;
  const InjectionBudget& budget(std::uint8_t template_id) const;

 private:
  const SessionKeys& keys_;
  EntityId self_;
  MacKey kd_;
  std::map<std::uint8_t, MessageTemplate> templates_;
  std::map<std::uint8_t, InjectionBudget> budgets_;
  std::uint64_t last_stream_sequence_ = 0;
  bool any_stream_ = false;
};

/// Validates that the template confines `injector` to its placeholders.
void check_template(const SessionConfig& config, const SegmentationInfo& layout, const std::vector<bool>& placeholder,
                    EntityId injector);

}  // namespace madtls::injection
