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

#include "madtls/access.hpp"

#include <set>
#include <sstream>

#include "madtls/error.hpp"

namespace madtls {

const char* to_string(Access access) {
  switch (access) {
    case Access::none: return "none";
    case Access::read: return "read";
    case Access::write: return "write";
  }
  return "?";
}

const char* to_string(KeyKind kind) { return kind == KeyKind::read ? "read" : "write"; }

AccessRights::AccessRights(std::size_t entity_count, std::size_t context_count)
    : entity_count_(entity_count), context_count_(context_count) {
  if (entity_count < 2 || entity_count > kMaxEntities) throw ConfigError("entity count must be in [2, 255]");
  if (context_count > kMaxContexts) throw ConfigError("at most 64 contexts");
  cells_.assign(context_count * (entity_count - 2), Access::none);
}

void AccessRights::check(ContextId context, EntityId entity) const {
  if (context.index >= context_count_) throw ConfigError("context out of range");
  if (entity.index >= entity_count_) throw ConfigError("entity out of range");
}

Access AccessRights::get(ContextId context, EntityId entity) const {
  check(context, entity);
  if (entity.index == 0) return Access::write;
  if (entity == receiver()) return Access::none;
  return cells_[context.index * middlebox_count() + (entity.index - 1)];
}

void AccessRights::set(ContextId context, EntityId middlebox, Access access) {
  check(context, middlebox);
  if (!is_middlebox(middlebox)) throw ConfigError("rights can only be assigned to middleboxes");
  cells_[context.index * middlebox_count() + (middlebox.index - 1)] = access;
}

bool AccessRights::has_key(ContextId context, EntityId entity, KeyKind kind) const {
  const Access a = get(context, entity);
  if (entity == receiver()) return false;
  return kind == KeyKind::read ? a != Access::none : a == Access::write;
}

std::vector<Access> AccessRights::column(EntityId entity) const {
  std::vector<Access> out;
  out.reserve(context_count_);
  for (std::size_t c = 0; c < context_count_; ++c)
    out.push_back(get(ContextId{static_cast<std::uint8_t>(c)}, entity));
  return out;
}

ContextId AccessRights::add_context(const std::vector<Access>& middlebox_row) {
  if (context_count_ >= kMaxContexts) throw ConfigError("at most 64 contexts");
  if (middlebox_row.size() != middlebox_count()) throw ConfigError("rights row size mismatch");
  cells_.insert(cells_.end(), middlebox_row.begin(), middlebox_row.end());
  return ContextId{static_cast<std::uint8_t>(context_count_++)};
}

SegmentationInfo::SegmentationInfo(std::vector<Segment> segments) : segments_(std::move(segments)) {}

std::size_t SegmentationInfo::total_bits() const {
  std::size_t total = 0;
  for (const auto& s : segments_) total += s.bit_length;
  return total;
}

std::size_t SegmentationInfo::bit_offset(std::size_t segment_index) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < segment_index; ++i) off += segments_.at(i).bit_length;
  return off;
}

std::size_t SegmentationInfo::context_bit_offset(std::size_t segment_index) const {
  const ContextId ctx = segments_.at(segment_index).context;
  std::size_t off = 0;
  for (std::size_t i = 0; i < segment_index; ++i)
    if (segments_[i].context == ctx) off += segments_[i].bit_length;
  return off;
}

void SegmentationInfo::validate(std::size_t context_count) const {
  if (segments_.empty()) throw ConfigError("layout needs at least one segment");
  if (segments_.size() > 255) throw ConfigError("layout has more than 255 segments");
  for (const auto& s : segments_) {
    if (s.bit_length == 0) throw ConfigError("zero-length segment");
    if (s.context.index >= context_count) throw ConfigError("layout references unknown context");
  }
}

ContextId delta(const SegmentationInfo& layout, std::size_t segment_index) {
  if (segment_index >= layout.size()) throw ProtocolError("segment index out of range");
  return layout[segment_index].context;
}

std::vector<BitString> split_segments(const BitString& data, const SegmentationInfo& layout) {
  if (data.size() != layout.total_bits()) throw ProtocolError("data length does not match layout");
  std::vector<BitString> out;
  out.reserve(layout.size());
  std::size_t off = 0;
  for (const auto& s : layout) {
    out.push_back(data.slice(off, s.bit_length));
    off += s.bit_length;
  }
  return out;
}

BitString join_segments(const std::vector<BitString>& segments) {
  BitString out;
  for (const auto& s : segments) out.append(s);
  return out;
}

void TemplateTable::add(std::uint8_t id, SegmentationInfo layout) {
  if (id >= kMaxTemplates) throw ConfigError("template id must be < 64");
  entries_[id] = std::move(layout);
}

std::uint8_t TemplateTable::append(SegmentationInfo layout) {
  const auto id = next_free_id();
  if (!id) throw ConfigError("template table full (64 entries)");
  add(*id, std::move(layout));
  return *id;
}

const SegmentationInfo* TemplateTable::find(std::uint8_t id) const {
  if (id >= kMaxTemplates || !entries_[id]) return nullptr;
  return &*entries_[id];
}

std::size_t TemplateTable::size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.has_value();
  return n;
}

std::optional<std::uint8_t> TemplateTable::next_free_id() const {
  for (std::size_t i = 0; i < kMaxTemplates; ++i)
    if (!entries_[i]) return static_cast<std::uint8_t>(i);
  return std::nullopt;
}

std::vector<SegmentationInfo> TemplateTable::dense() const {
  std::vector<SegmentationInfo> out;
  for (std::size_t i = 0; i < kMaxTemplates; ++i) {
    if (!entries_[i]) {
      for (std::size_t j = i; j < kMaxTemplates; ++j)
        if (entries_[j]) throw ConfigError("template ids must be dense from 0");
      break;
    }
    out.push_back(*entries_[i]);
  }
  return out;
}

KeyMatrix::KeyMatrix(std::size_t entity_count, std::size_t context_count)
    : entity_count_(entity_count), context_count_(context_count), enc_(context_count) {}

const MacKey* KeyMatrix::find(ContextId context, EntityId entity, KeyKind kind) const {
  const auto& map = kind == KeyKind::read ? read_ : write_;
  auto it = map.find({context.index, entity.index});
  return it == map.end() ? nullptr : &it->second;
}

const MacKey& KeyMatrix::key(ContextId context, EntityId entity, KeyKind kind) const {
  const MacKey* k = find(context, entity, kind);
  if (k == nullptr) {
    std::ostringstream msg;
    msg << "no " << to_string(kind) << " key for context " << int{context.index} << " at entity "
        << int{entity.index};
    throw AccessViolation(msg.str());
  }
  return *k;
}

void KeyMatrix::set(ContextId context, EntityId entity, KeyKind kind, const MacKey& key) {
  if (context.index >= context_count_) throw ConfigError("context out of range");
  if (entity.index + 1U >= entity_count_) throw ConfigError("no key may exist at the receiver");
  (kind == KeyKind::read ? read_ : write_)[{context.index, entity.index}] = key;
}

const StreamKey& KeyMatrix::enc(ContextId context) const {
  if (context.index >= enc_.size()) throw ConfigError("missing encryption key for context");
  return enc_[context.index];
}

void KeyMatrix::set_enc(ContextId context, const StreamKey& key) {
  if (context.index >= enc_.size()) throw ConfigError("context out of range");
  enc_[context.index] = key;
}

const MacKey* KeyMatrix::kd(EntityId middlebox) const {
  auto it = kd_.find(middlebox.index);
  return it == kd_.end() ? nullptr : &it->second;
}

void KeyMatrix::set_kd(EntityId middlebox, const MacKey& key) { kd_[middlebox.index] = key; }

std::size_t KeyMatrix::key_count(KeyKind kind) const {
  return (kind == KeyKind::read ? read_ : write_).size();
}

EntityId phi_owner(const KeyMatrix& matrix, ContextId context, EntityId entity, KeyKind kind) {
  if (entity.index == 0) throw AccessViolation("the sender has no predecessor key");
  if (entity.index >= matrix.entity_count()) throw ConfigError("entity out of range");
  const bool is_receiver = entity.index + 1U == matrix.entity_count();
  if (!is_receiver && matrix.find(context, entity, kind) == nullptr) {
    std::ostringstream msg;
    msg << "entity " << int{entity.index} << " has no " << to_string(kind) << " right on context "
        << int{context.index};
    throw AccessViolation(msg.str());
  }
  for (int j = entity.index - 1; j >= 0; --j) {
    const EntityId candidate{static_cast<std::uint8_t>(j)};
    if (matrix.find(context, candidate, kind) != nullptr) return candidate;
  }
  throw ConfigError("sender key missing from key matrix");
}

const MacKey& phi(const KeyMatrix& matrix, ContextId context, EntityId entity, KeyKind kind) {
  return matrix.key(context, phi_owner(matrix, context, entity, kind), kind);
}

const ContextKeys* EntityKeys::find(ContextId context) const {
  auto it = contexts.find(context);
  return it == contexts.end() ? nullptr : &it->second;
}

EntityKeys restrict_to(const KeyMatrix& matrix, const AccessRights& rights, EntityId entity) {
  EntityKeys out{entity, {}};
  const bool is_receiver = entity == rights.receiver();
  for (std::size_t c = 0; c < rights.context_count(); ++c) {
    const ContextId ctx{static_cast<std::uint8_t>(c)};
    ContextKeys keys;
    if (is_receiver) {
      keys.access = Access::read;
      keys.phi_read = phi(matrix, ctx, entity, KeyKind::read);
      keys.phi_write = phi(matrix, ctx, entity, KeyKind::write);
      keys.enc = matrix.enc(ctx);
      out.contexts.emplace(ctx, keys);
      continue;
    }
    keys.access = rights.get(ctx, entity);
    if (keys.access == Access::none) continue;
    keys.read = matrix.key(ctx, entity, KeyKind::read);
    if (keys.access == Access::write) keys.write = matrix.key(ctx, entity, KeyKind::write);
    if (entity.index > 0) {
      keys.phi_read = phi(matrix, ctx, entity, KeyKind::read);
      if (keys.access == Access::write) keys.phi_write = phi(matrix, ctx, entity, KeyKind::write);
    }
    keys.enc = matrix.enc(ctx);
    out.contexts.emplace(ctx, keys);
  }
  return out;
}

MacKey derive_kd_key(const Secret& psk_sm, std::span<const std::uint8_t> handshake_nonce) {
  return MacKey{kdf(psk_sm, {Bytes(handshake_nonce.begin(), handshake_nonce.end())})};
}

KeyMatrix derive_key_matrix(const Secret& psk_sr, const std::map<EntityId, Secret>& psks_sm,
                            std::span<const std::uint8_t> handshake_nonce,
                            const AccessRights& rights, bool require_kd) {
  if (psk_sr.empty()) throw ConfigError("sender/receiver PSK missing");
  const Bytes nonce(handshake_nonce.begin(), handshake_nonce.end());
  KeyMatrix m(rights.entity_count(), rights.context_count());

  for (std::size_t c = 0; c < rights.context_count(); ++c) {
    const ContextId ctx{static_cast<std::uint8_t>(c)};
    m.set_enc(ctx, StreamKey{kdf(psk_sr, {nonce, Bytes{ctx.index}, label("encrypt")})});
    for (std::size_t e = 0; e + 1 < rights.entity_count(); ++e) {
      const EntityId ent{static_cast<std::uint8_t>(e)};
      for (KeyKind kind : {KeyKind::read, KeyKind::write}) {
        if (!rights.has_key(ctx, ent, kind)) continue;
        m.set(ctx, ent, kind,
              MacKey{kdf(psk_sr, {nonce, Bytes{ent.index}, Bytes{ctx.index}, label(to_string(kind))})});
      }
    }
  }

  for (std::size_t e = 1; e + 1 < rights.entity_count(); ++e) {
    const EntityId mb{static_cast<std::uint8_t>(e)};
    bool entitled = false;
    for (auto a : rights.column(mb)) entitled |= a != Access::none;
    auto it = psks_sm.find(mb);
    if (it == psks_sm.end() || it->second.empty()) {
      if (entitled && require_kd) {
        throw ConfigError("missing PSK for middlebox " + std::to_string(e) + " with access rights");
      }
      continue;
    }
    m.set_kd(mb, derive_kd_key(it->second, nonce));
  }
  return m;
}

std::optional<EntityId> SessionConfig::find_middlebox(const std::string& name) const {
  for (std::size_t i = 0; i < middleboxes.size(); ++i)
    if (middleboxes[i].name == name) return EntityId{static_cast<std::uint8_t>(i + 1)};
  return std::nullopt;
}

std::vector<EntityId> SessionConfig::self_verifying() const {
  std::vector<EntityId> out;
  for (std::size_t i = 0; i < middleboxes.size(); ++i)
    if (middleboxes[i].self_verify) out.push_back(EntityId{static_cast<std::uint8_t>(i + 1)});
  return out;
}

void SessionConfig::validate() const {
  std::vector<std::string> problems;
  if (entity_count() > kMaxEntities) problems.push_back("more than 253 middleboxes");
  if (rights.entity_count() != entity_count()) problems.push_back("rights table entity count mismatch");
  if (context_count() == 0) problems.push_back("session needs at least one context");
  if (context_count() > kMaxContexts) problems.push_back("more than 64 contexts");
  std::set<std::string> names;
  for (const auto& mb : middleboxes)
    if (!names.insert(mb.name).second) problems.push_back("duplicate middlebox name '" + mb.name + "'");
  for (std::size_t id = 0; id < kMaxTemplates; ++id) {
    const auto* layout = templates.find(static_cast<std::uint8_t>(id));
    if (layout == nullptr) continue;
    try {
      layout->validate(context_count());
    } catch (const ConfigError& e) {
      problems.push_back("template " + std::to_string(id) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
    throw ConfigError(joined);
  }
}

}  // namespace madtls
