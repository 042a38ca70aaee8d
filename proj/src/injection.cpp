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

#include "madtls/injection.hpp"

#include <algorithm>

#include "madtls/error.hpp"
#include "wire.hpp"

namespace madtls::injection {

namespace {

constexpr std::uint8_t kWithTemplate = 0x01;

EntityId holder_before(const AccessRights& rights, ContextId context, EntityId entity, KeyKind kind) {
  for (int e = entity.index - 1; e > 0; --e) {
    const EntityId candidate{static_cast<std::uint8_t>(e)};
    if (rights.has_key(context, candidate, kind)) return candidate;
  }
  return EntityId{0};
}

std::array<std::uint8_t, kAeadNonceSize> stream_nonce(EntityId injector, std::uint64_t stream_sequence) {
  std::array<std::uint8_t, kAeadNonceSize> n{};
  n[0] = content_type::kTagStream;
  n[1] = injector.index;
  for (int i = 0; i < 8; ++i) n[4 + i] = static_cast<std::uint8_t>(stream_sequence >> (8 * (7 - i)));
  return n;
}

std::size_t ciphertext_bytes(const SegmentationInfo& layout) { return (layout.total_bits() + 7) / 8; }

}  // namespace

std::uint16_t EpochAllocator::next_regular() {
  // Injection epochs all lie above next_injection_.
  if (regular_ >= next_injection_) throw ConfigError("epoch space exhausted");
  return ++regular_;
}

std::uint16_t EpochAllocator::allocate(EntityId middlebox, std::uint8_t template_id) {
  const auto key = std::make_pair(middlebox.index, template_id);
  if (auto it = assigned_.find(key); it != assigned_.end()) return it->second;
  if (next_injection_ <= regular_) throw ConfigError("epoch space exhausted");
  const std::uint16_t epoch = next_injection_--;
  assigned_.emplace(key, epoch);
  return epoch;
}

bool EpochAllocator::is_injection(std::uint16_t epoch) const {
  return std::any_of(assigned_.begin(), assigned_.end(), [&](const auto& kv) { return kv.second == epoch; });
}

std::uint64_t MessageTemplate::highest_sequence() const {
  if (issued.empty()) throw ConfigError("template has no issued sequences");
  return issued.rbegin()->first;
}

void check_template(const SessionConfig& config, const SegmentationInfo& layout, const std::vector<bool>& placeholder,
                    EntityId injector) {
  const auto& rights = config.rights;
  if (!rights.is_middlebox(injector)) throw ConfigError("injector must be a middlebox");
  layout.validate(config.context_count());
  if (placeholder.size() != layout.size()) throw ConfigError("placeholder marks do not match the layout");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const ContextId ctx = layout[i].context;
    const Access own = rights.get(ctx, injector);
    if (placeholder[i]) {
      if (own != Access::write) throw ConfigError("placeholder context not writable by the injector");
      for (std::size_t m = 1; m + 1 < rights.entity_count(); ++m) {
        const EntityId other{static_cast<std::uint8_t>(m)};
        if (other != injector && rights.get(ctx, other) == Access::write)
          throw ConfigError("placeholder context writable by another middlebox");
      }
    } else if (own == Access::write) {
      throw ConfigError("fixed segment lies in a context the injector can write");
    }
  }
}

Issuer::Issuer(const SessionKeys& keys, EpochAllocator& epochs) : keys_(keys), epochs_(epochs) {}

MessageTemplate Issuer::issue(std::uint8_t template_id, const SegmentationInfo& layout, std::vector<bool> placeholder,
                              const BitString& fixed, EntityId injector, std::uint64_t first_sequence,
                              std::size_t count) {
  check_template(keys_.config, layout, placeholder, injector);
  if (fixed.size() != layout.total_bits()) throw ConfigError("fixed content does not match the layout");
  MessageTemplate t;
  t.template_id = template_id;
  t.layout = layout;
  t.placeholder = std::move(placeholder);
  t.issuer = EntityId{0};
  t.injector = injector;
  t.epoch = epochs_.allocate(injector, template_id);

  BitString skeleton;
  const auto parts = split_segments(fixed, layout);
  for (std::size_t i = 0; i < layout.size(); ++i) skeleton.append(t.placeholder[i] ? BitString(parts[i].size()) : parts[i]);
  fixed_[template_id] = skeleton;

  issue_range(t, first_sequence, count);
  return t;
}

std::vector<PreIssued> Issuer::extend(MessageTemplate& tmpl, std::size_t count) {
  const std::uint64_t next = tmpl.issued.empty() ? 0 : tmpl.highest_sequence() + 1;
  return issue_range(tmpl, next, count);
}

std::vector<PreIssued> Issuer::issue_range(MessageTemplate& tmpl, std::uint64_t first_sequence, std::size_t count) {
  if (count == 0) return {};
  if (first_sequence > kMaxSequence || count - 1 > kMaxSequence - first_sequence)
    throw ConfigError("sequence range exceeds 48 bits");
  const std::uint64_t last = first_sequence + count - 1;
  auto overlap = tmpl.issued.lower_bound(first_sequence);
  if (overlap != tmpl.issued.end() && overlap->first <= last) throw ConfigError("overlapping sequence range");
  std::vector<PreIssued> out;
  for (std::uint64_t s = first_sequence; s <= last; ++s) {
    out.push_back(issue_one(tmpl, s));
    tmpl.issued.emplace(s, out.back());
  }
  return out;
}

PreIssued Issuer::issue_one(const MessageTemplate& tmpl, std::uint64_t sequence) const {
  const auto fixed = fixed_.find(tmpl.template_id);
  if (fixed == fixed_.end()) throw ConfigError("template was not issued here");
  RecordHeader h;
  h.content_type = content_type::kInjected;
  h.epoch = tmpl.epoch;
  h.sequence = sequence;
  h.l_flag = true;
  PreIssued p;
  p.sequence = sequence;
  p.ciphertext = encrypt_segments(fixed->second, tmpl.layout, keys_.matrix, h.nonce());

  // Tag as it would arrive at the injector had the sender emitted the record.
  const auto binding = MacBinding::of(h);
  const auto segments = split_segments(p.ciphertext, tmpl.layout);
  const auto& rights = keys_.config.rights;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const ContextId ctx = tmpl.layout[i].context;
    const auto domain = binding.domain(i);
    for (KeyKind kind : {KeyKind::read, KeyKind::write}) {
      const EntityId holder = holder_before(rights, ctx, tmpl.injector, kind);
      p.base_tag ^= mac(keys_.matrix.key(ctx, holder, kind), domain, segments[i]);
    }
  }
  return p;
}

Bytes Issuer::tag_stream(const MessageTemplate& tmpl, const std::vector<PreIssued>& entries, bool with_template) {
  const MacKey* kd = keys_.matrix.kd(tmpl.injector);
  if (kd == nullptr) throw ConfigError("no key-distribution key for the injector");
  wire::Writer body;
  body.u8(tmpl.template_id);
  body.u8(tmpl.injector.index);
  body.u8(with_template ? kWithTemplate : 0);
  if (with_template) {
    body.bytes(encode_layout(tmpl.layout));
    Bytes marks((tmpl.placeholder.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < tmpl.placeholder.size(); ++i)
      if (tmpl.placeholder[i]) marks[i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
    body.bytes(marks);
  }
  if (entries.size() > 0xFFFF) throw ConfigError("too many entries for one tag stream record");
  body.u16(static_cast<std::uint16_t>(entries.size()));
  for (const auto& e : entries) {
    body.be(e.sequence, 6);
    body.bytes(e.ciphertext.bytes());
    body.bytes(e.base_tag.bytes);
  }

  const std::uint64_t seq = ++stream_sequence_;
  wire::Writer header;
  header.u8(content_type::kTagStream);
  header.u16(kDtls12Version);
  header.u16(tmpl.epoch);
  header.be(seq, 6);
  const Bytes aad = header.data();
  const Bytes sealed = aead_seal(AeadAlgorithm::aes_256_gcm, kd->bytes, stream_nonce(tmpl.injector, seq), aad,
                                 body.data());
  header.opaque16(sealed);
  return header.take();
}

Injector::Injector(const SessionKeys& keys, EntityId self, MacKey kd_key)
    : keys_(keys), self_(self), kd_(kd_key) {}

void Injector::accept_tag_stream(std::span<const std::uint8_t> data) {
  wire::Reader r(data);
  if (r.u8() != content_type::kTagStream) throw IgnoredRecord("not a tag stream record");
  if (r.u16() != kDtls12Version) throw ProtocolError("unsupported version");
  const std::uint16_t epoch = r.u16();
  const std::uint64_t seq = r.be(6);
  const Bytes sealed = r.opaque16();
  r.expect_done("tag stream record");
  if (any_stream_ && seq <= last_stream_sequence_) throw ReplayError("replayed tag stream record");
  const auto aad = data.first(11);
  auto plain = aead_open(AeadAlgorithm::aes_256_gcm, kd_.bytes, stream_nonce(self_, seq), aad, sealed);
  if (!plain) throw ProtocolError("tag stream record failed authentication");

  wire::Reader b(*plain);
  const std::uint8_t id = b.u8();
  if (b.u8() != self_.index) throw ProtocolError("tag stream addressed to another middlebox");
  const std::uint8_t flags = b.u8();
  MessageTemplate* t = nullptr;
  if ((flags & kWithTemplate) != 0) {
    MessageTemplate fresh;
    fresh.template_id = id;
    fresh.injector = self_;
    fresh.epoch = epoch;
    std::size_t pos = b.pos();
    fresh.layout = decode_layout(b.input(), pos);
    b.set_pos(pos);
    const auto marks = b.bytes((fresh.layout.size() + 7) / 8);
    for (std::size_t i = 0; i < fresh.layout.size(); ++i) fresh.placeholder.push_back((marks[i / 8] << (i % 8)) & 0x80);
    check_template(keys_.config, fresh.layout, fresh.placeholder, self_);
    auto [it, inserted] = templates_.emplace(id, std::move(fresh));
    if (!inserted) throw ProtocolError("template already known");
    t = &it->second;
    budgets_[id] = InjectionBudget{self_, id, 0, {}};
  } else {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw ProtocolError("tag stream for unknown template");
    t = &it->second;
  }
  if (t->epoch != epoch) throw ProtocolError("tag stream epoch mismatch");

  const std::size_t n = b.u16();
  const std::size_t ct_len = ciphertext_bytes(t->layout);
  std::vector<PreIssued> entries;
  for (std::size_t i = 0; i < n; ++i) {
    PreIssued e;
    e.sequence = b.be(6);
    e.ciphertext = BitString::from_bytes(b.bytes(ct_len), t->layout.total_bits());
    const auto tag = b.bytes(kTagSize);
    std::copy(tag.begin(), tag.end(), e.base_tag.bytes.begin());
    if (t->issued.contains(e.sequence)) throw ProtocolError("sequence issued twice");
    entries.push_back(std::move(e));
  }
  b.expect_done("tag stream body");
  last_stream_sequence_ = seq;
  any_stream_ = true;
  auto& budget = budgets_[id];
  for (auto& e : entries) {
    budget.highest = std::max(budget.highest, e.sequence);
    t->issued.emplace(e.sequence, std::move(e));
  }
}

ProtectedRecord Injector::inject(std::uint8_t template_id, std::uint64_t sequence,
                                 const SegmentEdits& placeholder_values) {
  auto it = templates_.find(template_id);
  if (it == templates_.end()) throw ConfigError("unknown injection template");
  const MessageTemplate& t = it->second;
  auto& budget = budgets_.at(template_id);
  if (budget.consumed.contains(sequence)) throw ReplayError("sequence already consumed");
  auto entry = t.issued.find(sequence);
  if (entry == t.issued.end()) throw ReplayError("sequence was not pre-issued");
  for (const auto& [index, value] : placeholder_values) {
    if (index >= t.layout.size() || !t.placeholder[index]) throw AccessViolation("value for a fixed segment");
    if (value.size() != t.layout[index].bit_length) throw ConfigError("placeholder value has the wrong length");
  }

  ProtectedRecord r;
  r.header.content_type = content_type::kInjected;
  r.header.epoch = t.epoch;
  r.header.sequence = sequence;
  r.header.l_flag = true;
  r.layout = t.layout;
  r.ciphertext = entry->second.ciphertext;
  r.main_tag = entry->second.base_tag;
  auto out = MiddleboxNode(keys_, self_).process(std::move(r), placeholder_values);
  budget.consumed.insert(sequence);
  return out.record;
}

const MessageTemplate* Injector::find(std::uint8_t template_id) const {
  auto it = templates_.find(template_id);
  return it == templates_.end() ? nullptr : &it->second;
}

const InjectionBudget& Injector::budget(std::uint8_t template_id) const { return budgets_.at(template_id); }

}  // namespace madtls::injection
