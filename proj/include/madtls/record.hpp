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
#include <span>
#include <vector>

#include "madtls/access.hpp"
#include "madtls/bits.hpp"
#include "madtls/crypto.hpp"

namespace madtls {

namespace content_type {
inline constexpr std::uint8_t kHandshake = 0x16;
inline constexpr std::uint8_t kTagStream = 0x1D;
inline constexpr std::uint8_t kRecord = 0x1E;
inline constexpr std::uint8_t kInjected = 0x1F;
}  // namespace content_type

inline constexpr std::uint16_t kDtls12Version = 0xFEFD;
/// content type, version, epoch, sequence, length.
inline constexpr std::size_t kDtlsHeaderSize = 13;
inline constexpr std::size_t kSelfVerifyEntrySize = 1 + kTagSize;

struct RecordHeader {
  std::uint8_t content_type = content_type::kRecord;
  std::uint16_t version = kDtls12Version;
  std::uint16_t epoch = 0;
  std::uint64_t sequence = 0;
  std::uint16_t length = 0;  // filled by encode/decode
  bool m_flag = false;
  bool l_flag = false;
  std::uint8_t template_id = 0;

  std::uint8_t seg_byte() const;
  Nonce nonce() const { return {epoch, sequence}; }
  friend bool operator==(const RecordHeader&, const RecordHeader&) = default;
};

struct SelfVerifyTag {
  EntityId target;
  PartialTag tag;
  friend bool operator==(const SelfVerifyTag&, const SelfVerifyTag&) = default;
};

/// A protected datagram. `layout` is always the resolved layout; it is written
/// inline only when header.l_flag is set.
struct ProtectedRecord {
  RecordHeader header;
  SegmentationInfo layout;
  BitString ciphertext;
  PartialTag main_tag;
  std::vector<SelfVerifyTag> self_verify_tags;  // ascending target

  PartialTag* find_self_verify(EntityId target);
  void strip_self_verify(EntityId target);
  friend bool operator==(const ProtectedRecord&, const ProtectedRecord&) = default;
};

Bytes encode_layout(const SegmentationInfo& layout);
/// Decodes one layout starting at `pos`; advances `pos`.
SegmentationInfo decode_layout(std::span<const std::uint8_t> wire, std::size_t& pos);

/// Value of the length field for this record.
std::size_t payload_length(const ProtectedRecord& record);
std::size_t wire_size(const ProtectedRecord& record);
/// Size of a DTLS 1.2 record with the same payload and a 16-byte tag.
std::size_t plain_dtls_record_size(std::size_t payload_bytes);

Bytes encode_record(const ProtectedRecord& record);
/// Throws IgnoredRecord for foreign content types and ProtocolError for
/// truncation, length mismatch or unknown templates.
ProtectedRecord decode_record(std::span<const std::uint8_t> wire, const TemplateTable& templates);

/// Encrypts or decrypts segment `index` of `layout` (the cipher is an involution).
BitString apply_segment_cipher(const StreamKey& key, Nonce nonce, const SegmentationInfo& layout,
                               std::size_t index, const BitString& data);

BitString encrypt_segments(const BitString& plaintext, const SegmentationInfo& layout,
                           const KeyMatrix& keys, Nonce nonce);
BitString encrypt_segments(const BitString& plaintext, const SegmentationInfo& layout,
                           const EntityKeys& keys, Nonce nonce);

/// Plaintext of every segment whose context the entity holds an encryption key for.
std::map<std::size_t, BitString> decrypt_segments_for(const EntityKeys& keys, const BitString& ciphertext,
                                                      const SegmentationInfo& layout, Nonce nonce);

}  // namespace madtls
