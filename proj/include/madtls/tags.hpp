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
#include <cstdint>
#include <optional>
#include <vector>

#include "madtls/access.hpp"
#include "madtls/crypto.hpp"
#include "madtls/record.hpp"

namespace madtls {

using Segments = std::vector<BitString>;

/// Binds every segment MAC to its record and position: the MAC domain is
/// purpose ‖ epoch ‖ sequence ‖ segment index.
struct MacBinding {
  std::uint8_t purpose = content_type::kRecord;
  Nonce nonce;

  std::array<std::uint8_t, 11> domain(std::size_t segment_index) const;
  static MacBinding of(const RecordHeader& header) { return {header.content_type, header.nonce()}; }
};

struct AggregatedTag {
  PartialTag value;
  friend bool operator==(const AggregatedTag&, const AggregatedTag&) = default;
};

enum class ViewRole : std::uint8_t { sender, middlebox, receiver };

/// Keys one entity uses for one accessible segment.
struct SegmentKeyView {
  std::size_t index = 0;
  ContextId context;
  Access access = Access::none;
  std::optional<MacKey> read;
  std::optional<MacKey> write;
  std::optional<MacKey> phi_read;
  std::optional<MacKey> phi_write;
};

/// An entity's keys projected onto one record layout. Only segments the
/// entity can access appear; the receiver sees all of them.
struct TagContextView {
  EntityId entity;
  ViewRole role = ViewRole::middlebox;
  std::vector<SegmentKeyView> segments;

  std::vector<std::size_t> read_set() const;
  std::vector<std::size_t> write_set() const;
};

TagContextView make_view(const EntityKeys& keys, const SegmentationInfo& layout, std::size_t entity_count);

/// Per-segment partial tags the sender computes once. Both the main tag and
/// every self-verify tag are XOR selections of these.
struct SenderPartials {
  std::vector<PartialTag> read;
  std::vector<PartialTag> write;

  AggregatedTag aggregate() const;
  PartialTag selfverify(const SegmentationInfo& layout, const std::vector<Access>& target_column) const;
};

SenderPartials sender_partials(const MacBinding& binding, const Segments& ciphertext,
                               const TagContextView& sender);

AggregatedTag initial_tag(const MacBinding& binding, const Segments& ciphertext, const TagContextView& sender);

/// MAC terms of one middlebox hop. Reader segments carry the φ/own read pair;
/// writer segments additionally the write pair, computed over old and new data.
struct HopTerms {
  std::size_t index = 0;
  Access access = Access::none;
  PartialTag phi_read;
  PartialTag own_read;
  PartialTag phi_write;
  PartialTag own_write;
};

struct HopDeltas {
  std::vector<HopTerms> terms;

  PartialTag main_delta() const;
  AggregatedTag apply(AggregatedTag tag) const { return {tag.value ^ main_delta()}; }
  /// Update of a downstream target's self-verify tag, restricted to the
  /// segments both the hop and the target can access.
  PartialTag apply_selfverify(PartialTag tag, const SegmentationInfo& layout,
                              const std::vector<Access>& target_column) const;
  /// What this entity's own self-verify tag must equal (φ terms only).
  PartialTag selfverify_expectation() const;
};

/// Terms for every accessible segment. `updated` may differ from `received`
/// only on write segments; lengths are immutable.
HopDeltas hop_deltas(const MacBinding& binding, const TagContextView& view, const Segments& received,
                     const Segments& updated);

AggregatedTag reader_update(AggregatedTag tag, const MacBinding& binding, const TagContextView& view,
                            const Segments& ciphertext);
AggregatedTag writer_update(AggregatedTag tag, const MacBinding& binding, const TagContextView& view,
                            const Segments& old_ciphertext, const Segments& new_ciphertext);
/// Reader update over read segments plus writer update over write segments.
AggregatedTag middlebox_update(AggregatedTag tag, const MacBinding& binding, const TagContextView& view,
                               const Segments& old_ciphertext, const Segments& new_ciphertext);

AggregatedTag receiver_expected(const MacBinding& binding, const Segments& ciphertext,
                                const TagContextView& receiver);
bool receiver_verify(AggregatedTag tag, const MacBinding& binding, const Segments& ciphertext,
                     const TagContextView& receiver);

PartialTag selfverify_initial(const MacBinding& binding, const TagContextView& sender, const Segments& ciphertext,
                              const SegmentationInfo& layout, const std::vector<Access>& target_column);
PartialTag selfverify_update(PartialTag tag, const MacBinding& binding, const TagContextView& intermediary,
                             const SegmentationInfo& layout, const std::vector<Access>& target_column,
                             const Segments& old_ciphertext, const Segments& new_ciphertext);
PartialTag selfverify_expected(const MacBinding& binding, const TagContextView& target, const Segments& ciphertext);
bool selfverify_check(const MacBinding& binding, const TagContextView& target, const Segments& ciphertext,
                      PartialTag tag);

}  // namespace madtls
