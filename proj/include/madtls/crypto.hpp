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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "madtls/bits.hpp"

namespace madtls {

inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kTagSize = 16;

using KeyBytes = std::array<std::uint8_t, kKeySize>;

/// Key of the segment MAC. Deliberately has no stream operator.
struct MacKey {
  KeyBytes bytes{};
  friend bool operator==(const MacKey&, const MacKey&) = default;
  friend auto operator<=>(const MacKey&, const MacKey&) = default;
};

struct StreamKey {
  KeyBytes bytes{};
  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// 16-byte authenticator; XOR-closed.
struct PartialTag {
  std::array<std::uint8_t, kTagSize> bytes{};

  PartialTag& operator^=(const PartialTag& other) {
    for (std::size_t i = 0; i < kTagSize; ++i) bytes[i] ^= other.bytes[i];
    return *this;
  }
  friend PartialTag operator^(PartialTag a, const PartialTag& b) { return a ^= b; }
  friend bool operator==(const PartialTag&, const PartialTag&) = default;

  bool is_zero() const;
  std::string to_hex() const;
};

inline constexpr std::uint64_t kMaxSequence = (std::uint64_t{1} << 48) - 1;

struct Nonce {
  std::uint16_t epoch = 0;
  std::uint64_t sequence = 0;  // 48 bits on the wire
  friend bool operator==(const Nonce&, const Nonce&) = default;
  friend auto operator<=>(const Nonce&, const Nonce&) = default;
};

/// Bits of keystream addressable for one (key, nonce, context): 2^24 AES blocks.
inline constexpr std::uint64_t kKeystreamSpanBits = (std::uint64_t{1} << 24) * 128;

/// Fixed label occupying the first four IV bytes.
inline constexpr std::array<std::uint8_t, 4> kKeystreamLabel = {'M', 'D', 'T', 'L'};

/// Byte string fed to HMAC: domain ‖ varint(bit length) ‖ data (zero padded).
Bytes mac_encoding(std::span<const std::uint8_t> domain, const BitString& data);

/// HMAC-SHA256 over mac_encoding(), truncated to 16 bytes.
PartialTag mac(const MacKey& key, std::span<const std::uint8_t> domain, const BitString& data);

/// AES-256-CTR keystream XOR at a bit offset within the record's keystream for
/// one context. Throws ProtocolError if the span would leave the reserved range.
BitString keystream_xor(const StreamKey& key, Nonce nonce, std::uint8_t context_index,
                        std::uint64_t bit_offset, const BitString& data);

/// The 16-byte CTR block for (nonce, context, counter).
std::array<std::uint8_t, 16> keystream_iv(Nonce nonce, std::uint8_t context_index,
                                          std::uint32_t counter);

/// HKDF-SHA256 (empty salt) with info = ‖ (u16 length ‖ label).
KeyBytes kdf(std::span<const std::uint8_t> secret, const std::vector<Bytes>& labels);

/// Convenience label from text.
Bytes label(std::string_view text);

std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key,
                                         std::span<const std::uint8_t> data);
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

enum class AeadAlgorithm : std::uint8_t { aes_256_gcm, chacha20_poly1305 };

inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kAeadTagSize = 16;

Bytes aead_seal(AeadAlgorithm alg, const KeyBytes& key, std::span<const std::uint8_t> nonce,
                std::span<const std::uint8_t> aad, std::span<const std::uint8_t> plaintext);
/// nullopt on authentication failure.
std::optional<Bytes> aead_open(AeadAlgorithm alg, const KeyBytes& key,
                               std::span<const std::uint8_t> nonce,
                               std::span<const std::uint8_t> aad,
                               std::span<const std::uint8_t> ciphertext);

/// Constant-time tag comparison.
bool tags_equal(const PartialTag& a, const PartialTag& b);

/// Per-thread primitive invocation counts, used by the cost model.
struct PrimitiveCounts {
  std::uint64_t mac = 0;
  std::uint64_t keystream = 0;
  std::uint64_t kdf = 0;
  std::uint64_t aead = 0;

  friend PrimitiveCounts operator-(const PrimitiveCounts& a, const PrimitiveCounts& b) {
    return {a.mac - b.mac, a.keystream - b.keystream, a.kdf - b.kdf, a.aead - b.aead};
  }
  friend bool operator==(const PrimitiveCounts&, const PrimitiveCounts&) = default;
};

PrimitiveCounts& primitive_counts();

void append_varint(Bytes& out, std::uint64_t value);

}  // namespace madtls
