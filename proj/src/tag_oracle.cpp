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

#include "madtls/tag_oracle.hpp"

#include "madtls/error.hpp"

namespace madtls {

TagOracle::TagOracle(const KeyMatrix& keys, const AccessRights& rights, SegmentationInfo layout,
                     MacBinding binding)
    : keys_(keys), rights_(rights), layout_(std::move(layout)), binding_(binding) {
  if (layout_.size() == 0) throw ProtocolError("oracle: records need at least one segment");
}

void TagOracle::toggle(Term term) {
  auto it = live_.find(term);
  if (it != live_.end()) {
    live_.erase(it);
  } else {
    live_.insert(std::move(term));
  }
}

std::uint8_t TagOracle::previous_holder(ContextId context, EntityId entity, KeyKind kind) const {
  for (int j = entity.index - 1; j > 0; --j) {
    const Access a = rights_.get(context, EntityId{static_cast<std::uint8_t>(j)});
    if (a == Access::write || (kind == KeyKind::read && a == Access::read)) return static_cast<std::uint8_t>(j);
  }
  return 0;
}

void TagOracle::sender(const Segments& ciphertext) {
  if (ciphertext.size() != layout_.size()) throw ProtocolError("oracle: segment count mismatch");
  for (std::size_t i = 0; i < ciphertext.size(); ++i) {
    const auto ctx = layout_[i].context.index;
    toggle({KeyKind::read, ctx, 0, i, ciphertext[i]});
    toggle({KeyKind::write, ctx, 0, i, ciphertext[i]});
  }
}

void TagOracle::hop(EntityId entity, const Segments& received, const Segments& forwarded) {
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const ContextId ctx = layout_[i].context;
    const Access a = rights_.get(ctx, entity);
    if (a == Access::none) continue;
    toggle({KeyKind::read, ctx.index, previous_holder(ctx, entity, KeyKind::read), i, received.at(i)});
    if (a == Access::read) {
      toggle({KeyKind::read, ctx.index, entity.index, i, received.at(i)});
      continue;
    }
    toggle({KeyKind::read, ctx.index, entity.index, i, forwarded.at(i)});
    toggle({KeyKind::write, ctx.index, previous_holder(ctx, entity, KeyKind::write), i, received.at(i)});
    toggle({KeyKind::write, ctx.index, entity.index, i, forwarded.at(i)});
  }
}

AggregatedTag TagOracle::value() const {
  PartialTag t;
  for (const auto& term : live_) {
    const MacKey& key = keys_.key(ContextId{term.context}, EntityId{term.holder}, term.kind);
    const auto domain = binding_.domain(term.segment);
    t ^= mac(key, domain, term.data);
  }
  return {t};
}

std::size_t TagOracle::live_count(std::size_t segment) const {
  std::size_t n = 0;
  for (const auto& term : live_) n += term.segment == segment;
  return n;
}

bool TagOracle::verify_individually(const Segments& final_ciphertext) const {
  std::set<Term> expected;
  const EntityId receiver = rights_.receiver();
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const ContextId ctx = layout_[i].context;
    expected.insert({KeyKind::read, ctx.index, previous_holder(ctx, receiver, KeyKind::read), i, final_ciphertext.at(i)});
    expected.insert({KeyKind::write, ctx.index, previous_holder(ctx, receiver, KeyKind::write), i, final_ciphertext.at(i)});
  }
  return expected == live_;
}

}  // namespace madtls
