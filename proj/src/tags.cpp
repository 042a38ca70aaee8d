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

#include "madtls/tags.hpp"

#include "madtls/error.hpp"

namespace madtls {

namespace {

const MacKey& require(const std::optional<MacKey>& key, const char* what) {
  if (!key) throw ConfigError(std::string("tag view lacks ") + what + " key");
  return *key;
}

PartialTag sigma(const MacKey& key, const MacBinding& binding, std::size_t index, const BitString& data) {
  const auto domain = binding.domain(index);
  return mac(key, domain, data);
}

void check_shapes(const Segments& a, const Segments& b) {
  if (a.size() != b.size()) throw ProtocolError("segment count changed in flight");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].size() != b[i].size()) throw ProtocolError("segment length changed in flight");
}

TagContextView filtered(const TagContextView& view, Access keep) {
  TagContextView out{view.entity, view.role, {}};
  for (const auto& s : view.segments)
    if (s.access == keep) out.segments.push_back(s);
  return out;
}

}  // namespace

std::array<std::uint8_t, 11> MacBinding::domain(std::size_t segment_index) const {
  if (segment_index > 0xFFFF) throw ProtocolError("segment index exceeds 16 bits");
  std::array<std::uint8_t, 11> d{};
  d[0] = purpose;
  d[1] = static_cast<std::uint8_t>(nonce.epoch >> 8);
  d[2] = static_cast<std::uint8_t>(nonce.epoch);
  for (int i = 0; i < 6; ++i) d[3 + i] = static_cast<std::uint8_t>(nonce.sequence >> (8 * (5 - i)));
  d[9] = static_cast<std::uint8_t>(segment_index >> 8);
  d[10] = static_cast<std::uint8_t>(segment_index);
  return d;
}

std::vector<std::size_t> TagContextView::read_set() const {
  std::vector<std::size_t> out;
  for (const auto& s : segments)
    if (s.access == Access::read) out.push_back(s.index);
  return out;
}

std::vector<std::size_t> TagContextView::write_set() const {
  std::vector<std::size_t> out;
  for (const auto& s : segments)
    if (s.access == Access::write) out.push_back(s.index);
  return out;
}

TagContextView make_view(const EntityKeys& keys, const SegmentationInfo& layout, std::size_t entity_count) {
  TagContextView view;
  view.entity = keys.entity;
  if (keys.entity.index == 0) {
    view.role = ViewRole::sender;
  } else if (keys.entity.index + 1U == entity_count) {
    view.role = ViewRole::receiver;
  } else {
    view.role = ViewRole::middlebox;
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const ContextKeys* ck = keys.find(layout[i].context);
    if (ck == nullptr || ck->access == Access::none) {
      if (view.role != ViewRole::middlebox) throw ConfigError("endpoint lacks keys for a context");
      continue;
    }
    view.segments.push_back({i, layout[i].context, ck->access, ck->read, ck->write, ck->phi_read, ck->phi_write});
  }
  return view;
}

AggregatedTag SenderPartials::aggregate() const {
  PartialTag t;
  for (std::size_t i = 0; i < read.size(); ++i) t ^= read[i] ^ write[i];
  return {t};
}

PartialTag SenderPartials::selfverify(const SegmentationInfo& layout,
                                      const std::vector<Access>& target_column) const {
  PartialTag t;
  for (std::size_t i = 0; i < read.size(); ++i) {
    const Access a = target_column.at(layout[i].context.index);
    if (a == Access::none) continue;
    t ^= read[i];
    if (a == Access::write) t ^= write[i];
  }
  return t;
}

SenderPartials sender_partials(const MacBinding& binding, const Segments& ciphertext,
                               const TagContextView& sender) {
  if (sender.role != ViewRole::sender) throw ConfigError("initial tag requires the sender view");
  if (ciphertext.empty()) throw ProtocolError("records need at least one segment");
  if (sender.segments.size() != ciphertext.size()) throw ConfigError("sender view does not cover the layout");
  SenderPartials p;
  p.read.reserve(ciphertext.size());
  p.write.reserve(ciphertext.size());
  for (const auto& s : sender.segments) {
    p.read.push_back(sigma(require(s.read, "sender read"), binding, s.index, ciphertext.at(s.index)));
    p.write.push_back(sigma(require(s.write, "sender write"), binding, s.index, ciphertext.at(s.index)));
  }
  return p;
}

AggregatedTag initial_tag(const MacBinding& binding, const Segments& ciphertext, const TagContextView& sender) {
  return sender_partials(binding, ciphertext, sender).aggregate();
}

PartialTag HopDeltas::main_delta() const {
  PartialTag t;
  for (const auto& term : terms) {
    t ^= term.phi_read ^ term.own_read;
    if (term.access == Access::write) t ^= term.phi_write ^ term.own_write;
  }
  return t;
}

PartialTag HopDeltas::apply_selfverify(PartialTag tag, const SegmentationInfo& layout,
                                       const std::vector<Access>& target_column) const {
  for (const auto& term : terms) {
    const Access target = target_column.at(layout[term.index].context.index);
    if (target == Access::none) continue;
    tag ^= term.phi_read ^ term.own_read;
    if (target == Access::write && term.access == Access::write) tag ^= term.phi_write ^ term.own_write;
  }
  return tag;
}

PartialTag HopDeltas::selfverify_expectation() const {
  PartialTag t;
  for (const auto& term : terms) {
    t ^= term.phi_read;
    if (term.access == Access::write) t ^= term.phi_write;
  }
  return t;
}

HopDeltas hop_deltas(const MacBinding& binding, const TagContextView& view, const Segments& received,
                     const Segments& updated) {
  if (view.role != ViewRole::middlebox) throw ConfigError("hop updates are performed by middleboxes");
  check_shapes(received, updated);
  HopDeltas out;
  out.terms.reserve(view.segments.size());
  for (const auto& s : view.segments) {
    const BitString& old_data = received.at(s.index);
    const BitString& new_data = updated.at(s.index);
    HopTerms term;
    term.index = s.index;
    term.access = s.access;
    if (s.access == Access::read) {
      if (old_data != new_data) throw AccessViolation("segment modified without write access");
      term.phi_read = sigma(require(s.phi_read, "predecessor read"), binding, s.index, old_data);
      term.own_read = sigma(require(s.read, "read"), binding, s.index, old_data);
    } else if (s.access == Access::write) {
      term.phi_read = sigma(require(s.phi_read, "predecessor read"), binding, s.index, old_data);
      term.own_read = sigma(require(s.read, "read"), binding, s.index, new_data);
      term.phi_write = sigma(require(s.phi_write, "predecessor write"), binding, s.index, old_data);
      term.own_write = sigma(require(s.write, "write"), binding, s.index, new_data);
    } else {
      continue;
    }
    out.terms.push_back(term);
  }
  // Segments outside the view must pass through untouched.
  std::vector<bool> covered(received.size(), false);
  for (const auto& s : view.segments) covered[s.index] = true;
  for (std::size_t i = 0; i < received.size(); ++i)
    if (!covered[i] && received[i] != updated[i]) throw AccessViolation("segment modified without access");
  return out;
}

AggregatedTag reader_update(AggregatedTag tag, const MacBinding& binding, const TagContextView& view,
                            const Segments& ciphertext) {
  const auto readers = filtered(view, Access::read);
  return hop_deltas(binding, readers, ciphertext, ciphertext).apply(tag);
}

AggregatedTag writer_update(AggregatedTag tag, const MacBinding& binding, const TagContextView& view,
                            const Segments& old_ciphertext, const Segments& new_ciphertext) {
  const auto writers = filtered(view, Access::write);
  return hop_deltas(binding, writers, old_ciphertext, new_ciphertext).apply(tag);
}

AggregatedTag middlebox_update(AggregatedTag tag, const MacBinding& binding, const TagContextView& view,
                               const Segments& old_ciphertext, const Segments& new_ciphertext) {
  return hop_deltas(binding, view, old_ciphertext, new_ciphertext).apply(tag);
}

AggregatedTag receiver_expected(const MacBinding& binding, const Segments& ciphertext,
                                const TagContextView& receiver) {
  if (receiver.role != ViewRole::receiver) throw ConfigError("verification requires the receiver view");
  if (ciphertext.empty()) throw ProtocolError("records need at least one segment");
  if (receiver.segments.size() != ciphertext.size()) throw ConfigError("receiver view does not cover the layout");
  PartialTag t;
  for (const auto& s : receiver.segments) {
    const BitString& data = ciphertext.at(s.index);
    t ^= sigma(require(s.phi_read, "predecessor read"), binding, s.index, data);
    t ^= sigma(require(s.phi_write, "predecessor write"), binding, s.index, data);
  }
  return {t};
}

bool receiver_verify(AggregatedTag tag, const MacBinding& binding, const Segments& ciphertext,
                     const TagContextView& receiver) {
  return tags_equal(receiver_expected(binding, ciphertext, receiver).value, tag.value);
}

PartialTag selfverify_initial(const MacBinding& binding, const TagContextView& sender, const Segments& ciphertext,
                              const SegmentationInfo& layout, const std::vector<Access>& target_column) {
  return sender_partials(binding, ciphertext, sender).selfverify(layout, target_column);
}

PartialTag selfverify_update(PartialTag tag, const MacBinding& binding, const TagContextView& intermediary,
                             const SegmentationInfo& layout, const std::vector<Access>& target_column,
                             const Segments& old_ciphertext, const Segments& new_ciphertext) {
  return hop_deltas(binding, intermediary, old_ciphertext, new_ciphertext)
      .apply_selfverify(tag, layout, target_column);
}

PartialTag selfverify_expected(const MacBinding& binding, const TagContextView& target, const Segments& ciphertext) {
  if (target.role != ViewRole::middlebox) throw ConfigError("self-verification is for middleboxes");
  PartialTag t;
  for (const auto& s : target.segments) {
    const BitString& data = ciphertext.at(s.index);
    if (s.access == Access::none) continue;
    t ^= sigma(require(s.phi_read, "predecessor read"), binding, s.index, data);
    if (s.access == Access::write) t ^= sigma(require(s.phi_write, "predecessor write"), binding, s.index, data);
  }
  return t;
}

bool selfverify_check(const MacBinding& binding, const TagContextView& target, const Segments& ciphertext,
                      PartialTag tag) {
  return tags_equal(selfverify_expected(binding, target, ciphertext), tag);
}

}  // namespace madtls
