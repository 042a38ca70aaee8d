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

#include <cstddef>
#include <set>

#include "madtls/access.hpp"
#include "madtls/tags.hpp"

namespace madtls {

/// Reference model of the aggregated tag as an explicit parity multiset of
/// partial-tag terms. It shares no code with the streaming update path:
/// predecessor holders come from a scan of the rights table and keys are
/// looked up by (context, holder) directly.
class TagOracle {
 public:
  TagOracle(const KeyMatrix& keys, const AccessRights& rights, SegmentationInfo layout, MacBinding binding);

  void sender(const Segments& ciphertext);
  /// Records the terms entity `entity` XORs into the tag, given what it
  /// received and what it forwarded.
  void hop(EntityId entity, const Segments& received, const Segments& forwarded);

  AggregatedTag value() const;
  std::size_t live_count() const { return live_.size(); }
  std::size_t live_count(std::size_t segment) const;
  /// True iff every live term is exactly a term the receiver expects, i.e.
  /// each partial tag verifies on its own.
  bool verify_individually(const Segments& final_ciphertext) const;

 private:
  struct Term {
    KeyKind kind;
    std::uint8_t context;
    std::uint8_t holder;
    std::size_t segment;
    BitString data;
    friend auto operator<=>(const Term&, const Term&) = default;
  };

  void toggle(Term term);
  std::uint8_t previous_holder(ContextId context, EntityId entity, KeyKind kind) const;

  const KeyMatrix& keys_;
  const AccessRights& rights_;
  SegmentationInfo layout_;
  MacBinding binding_;
  std::set<Term> live_;
};

}  // namespace madtls
