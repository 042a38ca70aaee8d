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

#include "madtls/record.hpp"

#include <algorithm>

#include "madtls/error.hpp"

namespace madtls {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint64_t read_be(std::span<const std::uint8_t> wire, std::size_t pos, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = v << 8 | wire[pos + i];
  return v;
}

std::uint64_t read_varint(std::span<const std::uint8_t> wire, std::size_t& pos) {
  std::uint64_t value = 0;
  for (int shift = 0; shift < 35; shift += 7) {
    if (pos >= wire.size()) throw ProtocolError("truncated varint");
    const std::uint8_t b = wire[pos++];
    value |= std::uint64_t{b & 0x7FU} << shift;
    if ((b & 0x80) == 0) return value;
  }
  throw ProtocolError("varint too long");
}

bool is_madtls_type(std::uint8_t type) {
  return type == content_type::kTagStream || type == content_type::kRecord ||
         type == content_type::kInjected;
}

}  // namespace

std::uint8_t RecordHeader::seg_byte() const {
  return static_cast<std::uint8_t>((m_flag ? 0x80 : 0) | (l_flag ? 0x40 : 0) | (template_id & 0x3F));
}

PartialTag* ProtectedRecord::find_self_verify(EntityId target) {
  for (auto& sv : self_verify_tags)
    if (sv.target == target) return &sv.tag;
  return nullptr;
}

void ProtectedRecord::strip_self_verify(EntityId target) {
  std::erase_if(self_verify_tags, [&](const SelfVerifyTag& sv) { return sv.target == target; });
}

Bytes encode_layout(const SegmentationInfo& layout) {
  if (layout.size() == 0 || layout.size() > 255) throw ProtocolError("layout must have 1..255 segments");
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(layout.size()));
  for (const auto& s : layout) {
    append_varint(out, s.bit_length);
    out.push_back(s.context.index);
  }
  return out;
}

SegmentationInfo decode_layout(std::span<const std::uint8_t> wire, std::size_t& pos) {
  if (pos >= wire.size()) throw ProtocolError("truncated layout");
  const std::size_t n = wire[pos++];
  if (n == 0) throw ProtocolError("layout with zero segments");
  std::vector<Segment> segs;
  segs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bits = read_varint(wire, pos);
    if (bits == 0 || bits > 0xFFFFFFFFULL) throw ProtocolError("invalid segment bit length");
    if (pos >= wire.size()) throw ProtocolError("truncated layout");
    const std::uint8_t ctx = wire[pos++];
    if (ctx >= kMaxContexts) throw ProtocolError("context id out of range");
    segs.push_back({static_cast<std::uint32_t>(bits), ContextId{ctx}});
  }
  return SegmentationInfo(std::move(segs));
}

std::size_t payload_length(const ProtectedRecord& record) {
  std::size_t n = 1;  // seg_byte
  if (record.header.l_flag) n += encode_layout(record.layout).size();
  n += (record.ciphertext.size() + 7) / 8;
  n += record.self_verify_tags.size() * kSelfVerifyEntrySize;
  n += kTagSize;
  return n;
}

std::size_t wire_size(const ProtectedRecord& record) { return kDtlsHeaderSize + payload_length(record); }

std::size_t plain_dtls_record_size(std::size_t payload_bytes) {
  return kDtlsHeaderSize + payload_bytes + kTagSize;
}

Bytes encode_record(const ProtectedRecord& r) {
  const auto& h = r.header;
  if (!is_madtls_type(h.content_type)) throw ProtocolError("not a MADTLS content type");
  if (h.template_id >= kMaxTemplates) throw ProtocolError("template id must be < 64");
  if (h.sequence > kMaxSequence) throw ProtocolError("sequence exceeds 48 bits");
  if (r.ciphertext.size() != r.layout.total_bits()) throw ProtocolError("ciphertext length does not match layout");
  if (h.m_flag == r.self_verify_tags.empty()) throw ProtocolError("m-flag must be set exactly when self-verify tags follow");
  for (std::size_t i = 1; i < r.self_verify_tags.size(); ++i)
    if (!(r.self_verify_tags[i - 1].target < r.self_verify_tags[i].target))
      throw ProtocolError("self-verify tags must be in ascending target order");

  const std::size_t len = payload_length(r);
  if (len > 0xFFFF) throw ProtocolError("record too long");

  Bytes out;
  out.reserve(kDtlsHeaderSize + len);
  out.push_back(h.content_type);
  put_u16(out, h.version);
  put_u16(out, h.epoch);
  for (int i = 5; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(h.sequence >> (8 * i)));
  put_u16(out, static_cast<std::uint16_t>(len));
  out.push_back(h.seg_byte());
  if (h.l_flag) {
    const Bytes layout = encode_layout(r.layout);
    out.insert(out.end(), layout.begin(), layout.end());
  }
  out.insert(out.end(), r.ciphertext.bytes().begin(), r.ciphertext.bytes().end());
  for (const auto& sv : r.self_verify_tags) {
    out.push_back(sv.target.index);
    out.insert(out.end(), sv.tag.bytes.begin(), sv.tag.bytes.end());
  }
  out.insert(out.end(), r.main_tag.bytes.begin(), r.main_tag.bytes.end());
  return out;
}

ProtectedRecord decode_record(std::span<const std::uint8_t> wire, const TemplateTable& templates) {
  if (wire.empty()) throw ProtocolError("empty datagram");
  if (!is_madtls_type(wire[0])) throw IgnoredRecord("foreign content type");
  if (wire.size() < kDtlsHeaderSize + 1 + kTagSize) throw ProtocolError("truncated record");

  ProtectedRecord r;
  auto& h = r.header;
  h.content_type = wire[0];
  h.version = static_cast<std::uint16_t>(read_be(wire, 1, 2));
  h.epoch = static_cast<std::uint16_t>(read_be(wire, 3, 2));
  h.sequence = read_be(wire, 5, 6);
  h.length = static_cast<std::uint16_t>(read_be(wire, 11, 2));
  if (h.version != kDtls12Version) throw ProtocolError("unsupported version");
  if (kDtlsHeaderSize + h.length != wire.size()) throw ProtocolError("length field mismatch");

  const std::uint8_t seg = wire[13];
  h.m_flag = (seg & 0x80) != 0;
  h.l_flag = (seg & 0x40) != 0;
  h.template_id = seg & 0x3F;

  std::size_t pos = 14;
  if (h.l_flag) {
    if (h.template_id != 0) throw ProtocolError("template bits must be zero with explicit layout");
    r.layout = decode_layout(wire, pos);
  } else {
    const SegmentationInfo* layout = templates.find(h.template_id);
    if (layout == nullptr) throw ProtocolError("unknown template id " + std::to_string(h.template_id));
    r.layout = *layout;
  }

  const std::size_t bits = r.layout.total_bits();
  const std::size_t ct_bytes = (bits + 7) / 8;
  if (wire.size() < pos + ct_bytes + kTagSize) throw ProtocolError("truncated record");
  const std::size_t trailer = wire.size() - pos - ct_bytes - kTagSize;
  if (trailer % kSelfVerifyEntrySize != 0) throw ProtocolError("malformed self-verify trailer");
  if ((trailer != 0) != h.m_flag) throw ProtocolError("m-flag does not match the self-verify trailer");

  const auto ct = wire.subspan(pos, ct_bytes);
  r.ciphertext = BitString::from_bytes(ct, bits);
  // Padding bits must be zero; otherwise the encoding would not be canonical.
  if (!std::equal(r.ciphertext.bytes().begin(), r.ciphertext.bytes().end(), ct.begin()))
    throw ProtocolError("non-zero ciphertext padding");
  pos += ct_bytes;

  for (std::size_t i = 0; i < trailer / kSelfVerifyEntrySize; ++i) {
    SelfVerifyTag sv;
    sv.target = EntityId{wire[pos++]};
    std::copy_n(wire.begin() + static_cast<std::ptrdiff_t>(pos), kTagSize, sv.tag.bytes.begin());
    pos += kTagSize;
    if (!r.self_verify_tags.empty() && !(r.self_verify_tags.back().target < sv.target))
      throw ProtocolError("self-verify tags out of order");
    r.self_verify_tags.push_back(sv);
  }
  std::copy_n(wire.begin() + static_cast<std::ptrdiff_t>(pos), kTagSize, r.main_tag.bytes.begin());
  return r;
}

BitString apply_segment_cipher(const StreamKey& key, Nonce nonce, const SegmentationInfo& layout,
                               std::size_t index, const BitString& data) {
  if (data.size() != layout[index].bit_length) throw ProtocolError("segment length mismatch");
  return keystream_xor(key, nonce, layout[index].context.index, layout.context_bit_offset(index), data);
}

namespace {

template <typename KeyLookup>
BitString encrypt_with(const BitString& plaintext, const SegmentationInfo& layout, Nonce nonce,
                       KeyLookup&& lookup) {
  if (plaintext.size() != layout.total_bits()) throw ProtocolError("plaintext length does not match layout");
  const auto segments = split_segments(plaintext, layout);
  BitString out;
  for (std::size_t i = 0; i < segments.size(); ++i)
    out.append(apply_segment_cipher(lookup(layout[i].context), nonce, layout, i, segments[i]));
  return out;
}

}  // namespace

BitString encrypt_segments(const BitString& plaintext, const SegmentationInfo& layout,
                           const KeyMatrix& keys, Nonce nonce) {
  return encrypt_with(plaintext, layout, nonce, [&](ContextId c) -> const StreamKey& {
    if (c.index >= keys.context_count()) throw ConfigError("missing encryption key for context");
    return keys.enc(c);
  });
}

BitString encrypt_segments(const BitString& plaintext, const SegmentationInfo& layout,
                           const EntityKeys& keys, Nonce nonce) {
  return encrypt_with(plaintext, layout, nonce, [&](ContextId c) -> const StreamKey& {
    const ContextKeys* ck = keys.find(c);
    if (ck == nullptr || !ck->enc) throw ConfigError("missing encryption key for context");
    return *ck->enc;
  });
}

std::map<std::size_t, BitString> decrypt_segments_for(const EntityKeys& keys, const BitString& ciphertext,
                                                      const SegmentationInfo& layout, Nonce nonce) {
  std::map<std::size_t, BitString> out;
  const auto segments = split_segments(ciphertext, layout);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const ContextKeys* ck = keys.find(layout[i].context);
    if (ck == nullptr || !ck->enc) continue;
    out.emplace(i, apply_segment_cipher(*ck->enc, nonce, layout, i, segments[i]));
  }
  return out;
}

}  // namespace madtls
