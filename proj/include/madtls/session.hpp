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
#include <optional>
#include <string>
#include <vector>

#include "madtls/access.hpp"
#include "madtls/handshake.hpp"
#include "madtls/record.hpp"
#include "madtls/tags.hpp"

namespace madtls {

/// Key views of every entity of one established session.
struct SessionKeys {
  SessionConfig config;
  KeyMatrix matrix;
  std::vector<EntityKeys> entities;  // index = entity

  const EntityKeys& of(EntityId entity) const { return entities.at(entity.index); }
  EntityId receiver() const { return config.rights.receiver(); }

  static SessionKeys derive(SessionConfig config, const Secret& psk_sr, const std::map<EntityId, Secret>& psks_sm,
                            std::span<const std::uint8_t> handshake_nonce);
  /// Takes each party's keys from a completed handshake: the client's matrix
  /// for the sender, each middlebox's unwrapped blob, and the server's view
  /// for the receiver.
  static SessionKeys from_handshake(const handshake::HandshakeResult& result);
};

/// DTLS-style 64-entry anti-replay window.
class ReplayWindow {
 public:
  static constexpr std::uint64_t kSize = 64;

  bool fresh(std::uint64_t sequence) const;
  void mark(std::uint64_t sequence);

 private:
  bool any_ = false;
  std::uint64_t top_ = 0;
  std::uint64_t bitmap_ = 0;  // bit i = top_ - i seen
};

class Sender {
 public:
  explicit Sender(const SessionKeys& keys, std::uint16_t epoch = 1);

  /// Record referencing a negotiated template (m flag clear).
  ProtectedRecord protect(const BitString& plaintext, std::uint8_t template_id);
  /// Record carrying its layout inline.
  ProtectedRecord protect(const BitString& plaintext, const SegmentationInfo& layout);
  /// Full control over header fields; used for injection templates and vectors.
  ProtectedRecord protect_at(const RecordHeader& header, const SegmentationInfo& layout,
                             const BitString& plaintext) const;

  std::uint16_t epoch() const { return epoch_; }
  std::uint64_t next_sequence() const { return next_sequence_; }

 private:
  const SessionKeys& keys_;
  std::uint16_t epoch_;
  std::uint64_t next_sequence_ = 0;
};

enum class SelfVerifyPolicy : std::uint8_t { drop_and_report, flag, forward };
const char* to_string(SelfVerifyPolicy policy);
SelfVerifyPolicy parse_self_verify_policy(const std::string& text);

struct HopOutcome {
  enum class Status : std::uint8_t { forwarded, dropped };
  Status status = Status::forwarded;
  ProtectedRecord record;
  std::map<std::size_t, BitString> view;  // decrypted segments this hop could read
  std::optional<bool> self_verified;
  std::string note;
};

/// Plaintext replacements keyed by segment index.
using SegmentEdits = std::map<std::size_t, BitString>;

class MiddleboxNode {
 public:
  MiddleboxNode(const SessionKeys& keys, EntityId entity, SelfVerifyPolicy policy = SelfVerifyPolicy::drop_and_report);

  /// Decrypts the accessible segments, applies `edits` (write segments only),
  /// checks and strips the own self-verify tag and updates all tags.
  HopOutcome process(ProtectedRecord record, const SegmentEdits& edits = {}) const;

  EntityId entity() const { return entity_; }
  bool self_verifying() const;

 private:
  const SessionKeys& keys_;
  EntityId entity_;
  SelfVerifyPolicy policy_;
};

struct ReceiveOutcome {
  bool accepted = false;
  std::string reason;
  std::uint8_t content_type = 0;
  Nonce nonce;
  BitString plaintext;
};

class ReceiverNode {
 public:
  explicit ReceiverNode(const SessionKeys& keys);

  ReceiveOutcome receive(std::span<const std::uint8_t> wire);
  ReceiveOutcome receive(const ProtectedRecord& record);

  /// Accepts 0x1F records under `epoch`, which must carry `layout`.
  void register_injection_epoch(std::uint16_t epoch, SegmentationInfo layout);
  bool is_injection_epoch(std::uint16_t epoch) const { return injection_.contains(epoch); }
  const std::map<std::uint16_t, ReplayWindow>& windows() const { return windows_; }

 private:
  const SessionKeys& keys_;
  std::map<std::uint16_t, SegmentationInfo> injection_;
  std::map<std::uint16_t, ReplayWindow> windows_;
};

}  // namespace madtls
