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

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "madtls/bits.hpp"
#include "madtls/crypto.hpp"

namespace madtls {

/// Position on the path: 0 is the sender, entity_count-1 the receiver.
struct EntityId {
  std::uint8_t index = 0;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct ContextId {
  std::uint8_t index = 0;
  friend auto operator<=>(const ContextId&, const ContextId&) = default;
};

inline constexpr std::size_t kMaxContexts = 64;
inline constexpr std::size_t kMaxTemplates = 64;
inline constexpr std::size_t kMaxEntities = 255;

enum class Access : std::uint8_t { none = 0, read = 1, write = 2 };
enum class KeyKind : std::uint8_t { read, write };

const char* to_string(Access access);
const char* to_string(KeyKind kind);

/// Per (context, middlebox) rights. The sender implicitly writes every
/// context; the receiver has no entry. `write` implies read-key ownership.
class AccessRights {
 public:
  AccessRights() = default;
  AccessRights(std::size_t entity_count, std::size_t context_count);

  std::size_t entity_count() const { return entity_count_; }
  std::size_t context_count() const { return context_count_; }
  std::size_t middlebox_count() const { return entity_count_ - 2; }
  EntityId receiver() const { return EntityId{static_cast<std::uint8_t>(entity_count_ - 1)}; }
  bool is_middlebox(EntityId e) const { return e.index > 0 && e.index + 1U < entity_count_; }

  Access get(ContextId context, EntityId entity) const;
  void set(ContextId context, EntityId middlebox, Access access);

  /// True iff k^kind_{context,entity} exists in the key matrix.
  bool has_key(ContextId context, EntityId entity, KeyKind kind) const;

  /// Access of `entity` to every context, indexed by context.
  std::vector<Access> column(EntityId entity) const;

  /// Grows the table by one context with the given per-middlebox row.
  ContextId add_context(const std::vector<Access>& middlebox_row);

  friend bool operator==(const AccessRights&, const AccessRights&) = default;

 private:
  void check(ContextId context, EntityId entity) const;

  std::size_t entity_count_ = 2;
  std::size_t context_count_ = 0;
  std::vector<Access> cells_;  // context-major, middlebox index 1..e-2 mapped to 0..e-3
};

struct Segment {
  std::uint32_t bit_length = 0;
  ContextId context;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Ordered, contiguous, non-overlapping partition of a plaintext.
class SegmentationInfo {
 public:
  SegmentationInfo() = default;
  explicit SegmentationInfo(std::vector<Segment> segments);

  std::size_t size() const { return segments_.size(); }
  const Segment& operator[](std::size_t i) const { return segments_[i]; }
  const std::vector<Segment>& segments() const { return segments_; }
  auto begin() const { return segments_.begin(); }
  auto end() const { return segments_.end(); }

  std::size_t total_bits() const;
  std::size_t bit_offset(std::size_t segment_index) const;
  /// Bits occupied by earlier segments of the same context (keystream offset).
  std::size_t context_bit_offset(std::size_t segment_index) const;

  /// Throws ConfigError for empty layouts, zero-length segments or context ids
  /// outside [0, context_count).
  void validate(std::size_t context_count) const;

  friend bool operator==(const SegmentationInfo&, const SegmentationInfo&) = default;

 private:
  std::vector<Segment> segments_;
};

ContextId delta(const SegmentationInfo& layout, std::size_t segment_index);

/// Splits a concatenated bit string into per-segment pieces.
std::vector<BitString> split_segments(const BitString& data, const SegmentationInfo& layout);
BitString join_segments(const std::vector<BitString>& segments);

class TemplateTable {
 public:
  void add(std::uint8_t id, SegmentationInfo layout);
  std::uint8_t append(SegmentationInfo layout);
  const SegmentationInfo* find(std::uint8_t id) const;
  std::size_t size() const;
  std::optional<std::uint8_t> next_free_id() const;
  /// Layouts in ascending id order; ids must be dense from 0.
  std::vector<SegmentationInfo> dense() const;

  friend bool operator==(const TemplateTable&, const TemplateTable&) = default;

 private:
  std::array<std::optional<SegmentationInfo>, kMaxTemplates> entries_;
};

/// All session keys. Read/write maps are partial according to the rights the
/// matrix was derived for.
class KeyMatrix {
 public:
  KeyMatrix() = default;
  KeyMatrix(std::size_t entity_count, std::size_t context_count);

  std::size_t entity_count() const { return entity_count_; }
  std::size_t context_count() const { return context_count_; }

  const MacKey* find(ContextId context, EntityId entity, KeyKind kind) const;
  /// Throws AccessViolation when absent.
  const MacKey& key(ContextId context, EntityId entity, KeyKind kind) const;
  void set(ContextId context, EntityId entity, KeyKind kind, const MacKey& key);

  const StreamKey& enc(ContextId context) const;
  void set_enc(ContextId context, const StreamKey& key);

  const MacKey* kd(EntityId middlebox) const;
  void set_kd(EntityId middlebox, const MacKey& key);

  std::size_t key_count(KeyKind kind) const;

  friend bool operator==(const KeyMatrix&, const KeyMatrix&) = default;

 private:
  using Slot = std::pair<std::uint8_t, std::uint8_t>;  // (context, entity)
  std::size_t entity_count_ = 0;
  std::size_t context_count_ = 0;
  std::map<Slot, MacKey> read_;
  std::map<Slot, MacKey> write_;
  std::vector<StreamKey> enc_;
  std::map<std::uint8_t, MacKey> kd_;
};

/// Entity index of the nearest earlier holder of k^kind_{context,·}.
EntityId phi_owner(const KeyMatrix& matrix, ContextId context, EntityId entity, KeyKind kind);

/// Predecessor key φ(k^kind_{context,entity}). The receiver may always query;
/// other entities only for keys they own.
const MacKey& phi(const KeyMatrix& matrix, ContextId context, EntityId entity, KeyKind kind);

/// Key material one entity holds for one context.
struct ContextKeys {
  Access access = Access::none;
  std::optional<MacKey> read;
  std::optional<MacKey> write;
  std::optional<MacKey> phi_read;
  std::optional<MacKey> phi_write;
  std::optional<StreamKey> enc;
  friend bool operator==(const ContextKeys&, const ContextKeys&) = default;
};

/// Everything one entity knows: the column restriction of the key matrix plus
/// predecessor keys. Receivers hold φ keys and encryption keys for all contexts.
struct EntityKeys {
  EntityId entity;
  std::map<ContextId, ContextKeys> contexts;

  const ContextKeys* find(ContextId context) const;
  friend bool operator==(const EntityKeys&, const EntityKeys&) = default;
};

EntityKeys restrict_to(const KeyMatrix& matrix, const AccessRights& rights, EntityId entity);

using Secret = Bytes;

/// Derives the full matrix from the sender/receiver PSK and the sender/middlebox
/// PSKs. Throws ConfigError if a middlebox with rights has no PSK, unless
/// `require_kd` is false (the receiver may not know middlebox secrets).
KeyMatrix derive_key_matrix(const Secret& psk_sr, const std::map<EntityId, Secret>& psks_sm,
                            std::span<const std::uint8_t> handshake_nonce,
                            const AccessRights& rights, bool require_kd = true);

MacKey derive_kd_key(const Secret& psk_sm, std::span<const std::uint8_t> handshake_nonce);

struct MiddleboxInfo {
  std::string name;
  std::string address;
  bool self_verify = false;
  friend bool operator==(const MiddleboxInfo&, const MiddleboxInfo&) = default;
};

/// Static description of one session.
struct SessionConfig {
  std::vector<MiddleboxInfo> middleboxes;
  AccessRights rights;
  TemplateTable templates;

  std::size_t entity_count() const { return middleboxes.size() + 2; }
  std::size_t context_count() const { return rights.context_count(); }
  std::optional<EntityId> find_middlebox(const std::string& name) const;
  std::vector<EntityId> self_verifying() const;

  /// Throws ConfigError listing all violations.
  void validate() const;
};

}  // namespace madtls
