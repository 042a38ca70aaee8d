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

#include <gtest/gtest.h>

#include <random>

#include "madtls/bits.hpp"
#include "madtls/crypto.hpp"
#include "madtls/error.hpp"

using namespace madtls;

namespace {

const std::array<std::uint8_t, 11> kDomain = {0x1E, 0, 1, 0, 0, 0, 0, 0, 7, 0, 2};

MacKey ones() {
  MacKey k;
  k.bytes.fill(1);
  return k;
}

}  // namespace

TEST(Bits, HexAndBitRoundTrip) {
  const auto b = BitString::from_bits("1011001");
  EXPECT_EQ(b.size(), 7U);
  EXPECT_EQ(b.to_bits(), "1011001");
  EXPECT_EQ(b.to_hex(), "b2");
  EXPECT_EQ(BitString::from_hex("00ff10").to_bits(), "000000001111111100010000");
  EXPECT_THROW(BitString::from_hex("abc"), Error);
}

TEST(Bits, SliceAppendFlip) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    BitString a(rng() % 70);
    for (std::size_t i = 0; i < a.size(); ++i) a.set_bit(i, (rng() & 1U) != 0);
    BitString b(rng() % 70);
    for (std::size_t i = 0; i < b.size(); ++i) b.set_bit(i, (rng() & 1U) != 0);
    BitString joined = a;
    joined.append(b);
    ASSERT_EQ(joined.size(), a.size() + b.size());
    EXPECT_EQ(joined.slice(0, a.size()), a);
    EXPECT_EQ(joined.slice(a.size(), b.size()), b);
    EXPECT_EQ(joined.to_bits(), a.to_bits() + b.to_bits());
    if (!joined.empty()) {
      const std::size_t i = rng() % joined.size();
      BitString f = joined;
      f.flip(i);
      EXPECT_NE(f, joined);
      EXPECT_EQ(f.bit(i), !joined.bit(i));
    }
  }
}

TEST(Bits, PaddingStaysZero) {
  BitString b = BitString::from_bits("111");
  EXPECT_EQ(b.bytes()[0], 0xE0);
  const auto ored = b ^ BitString::from_bits("011");
  EXPECT_EQ(ored.to_bits(), "100");
  EXPECT_EQ(ored.bytes()[0], 0x80);
}

TEST(Crypto, MacMatchesIndependentHmac) {
  // Expected values computed with Python's hmac module over
  // domain || varint(bit length) || data.
  EXPECT_EQ(mac(ones(), kDomain, BitString::from_bits("10101")).to_hex(), "7cb75d18402ed42f9a8b7ef79157a77c");
  EXPECT_EQ(mac(ones(), kDomain, BitString::from_bits("10101000")).to_hex(), "0fb9a4fbec4255412b2a6467bc744176");
  EXPECT_EQ(mac(ones(), kDomain, BitString::from_bits(std::string(200, '1'))).to_hex(),
            "60c0db1a70dc570c853d990a06d73406");
}

TEST(Crypto, MacSeparatesBitLengths) {
  // Same padded bytes, different bit lengths.
  const auto a = mac(ones(), kDomain, BitString::from_bits("1"));
  const auto b = mac(ones(), kDomain, BitString::from_bits("10"));
  EXPECT_NE(a, b);
}

TEST(Crypto, MacSeparatesDomains) {
  auto other = kDomain;
  other[10] = 3;
  const auto data = BitString::from_hex("0102");
  EXPECT_NE(mac(ones(), kDomain, data), mac(ones(), other, data));
}

TEST(Crypto, VarintEncoding) {
  Bytes out;
  append_varint(out, 5);
  append_varint(out, 200);
  append_varint(out, 16384);
  EXPECT_EQ(to_hex(out), "05c801808001");
}

TEST(Crypto, HkdfGoldenVectors) {
  // RFC 5869 test case 3 (empty salt and info), first 32 bytes.
  const Bytes ikm(22, 0x0b);
  EXPECT_EQ(to_hex(kdf(ikm, {})), "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d");
  Bytes secret(16);
  for (std::size_t i = 0; i < secret.size(); ++i) secret[i] = static_cast<std::uint8_t>(i);
  EXPECT_EQ(to_hex(kdf(secret, {label("read"), Bytes{0x00, 0x03}})),
            "e96e4a56701c33b691b371948e3a82a969302aad6a90b101fe8883dea477cfed");
  EXPECT_THROW(kdf(Bytes{}, {}), ConfigError);
}

TEST(Crypto, KeystreamMatchesAesCtr) {
  StreamKey key;
  for (std::size_t i = 0; i < key.bytes.size(); ++i) key.bytes[i] = static_cast<std::uint8_t>(i);
  const Nonce nonce{5, 0x010203040506ULL};
  const auto out = keystream_xor(key, nonce, 3, 128 + 4, BitString(20));
  EXPECT_EQ(out.to_bits(), "11110011001101001011");
  const auto iv = keystream_iv(nonce, 3, 1);
  EXPECT_EQ(to_hex(iv), "4d44544c0005010203040506" "03000001");
}

TEST(Crypto, KeystreamIsInvolutionAndOffsetConsistent) {
  StreamKey key;
  key.bytes.fill(9);
  const Nonce nonce{1, 77};
  const auto data = BitString::from_hex("00112233445566778899aabbccddeeff0011");
  EXPECT_EQ(keystream_xor(key, nonce, 0, 13, keystream_xor(key, nonce, 0, 13, data)), data);
  const auto whole = keystream_xor(key, nonce, 0, 0, BitString(300));
  EXPECT_EQ(keystream_xor(key, nonce, 0, 129, BitString(50)), whole.slice(129, 50));
  EXPECT_NE(keystream_xor(key, nonce, 1, 0, BitString(64)), whole.slice(0, 64));
}

TEST(Crypto, KeystreamSpanEnforced) {
  StreamKey key;
  EXPECT_THROW(keystream_xor(key, {1, 1}, 0, kKeystreamSpanBits - 4, BitString(8)), ProtocolError);
  EXPECT_THROW(keystream_xor(key, {1, kMaxSequence + 1}, 0, 0, BitString(8)), ProtocolError);
}

TEST(Crypto, AeadRoundTripAndTamper) {
  KeyBytes key{};
  key.fill(3);
  const Bytes nonce(kAeadNonceSize, 1);
  const Bytes aad = label("header");
  const Bytes pt = label("key blob contents");
  for (auto alg : {AeadAlgorithm::aes_256_gcm, AeadAlgorithm::chacha20_poly1305}) {
    auto ct = aead_seal(alg, key, nonce, aad, pt);
    EXPECT_EQ(ct.size(), pt.size() + kAeadTagSize);
    EXPECT_EQ(aead_open(alg, key, nonce, aad, ct), pt);
    ct[0] ^= 1;
    EXPECT_FALSE(aead_open(alg, key, nonce, aad, ct).has_value());
    ct[0] ^= 1;
    EXPECT_FALSE(aead_open(alg, key, nonce, label("other"), ct).has_value());
  }
}

TEST(Crypto, CountsTrackCalls) {
  const auto before = primitive_counts();
  mac(ones(), kDomain, BitString(8));
  mac(ones(), kDomain, BitString(8));
  keystream_xor(StreamKey{}, {1, 1}, 0, 0, BitString(8));
  const auto d = primitive_counts() - before;
  EXPECT_EQ(d.mac, 2U);
  EXPECT_EQ(d.keystream, 1U);
}

TEST(Crypto, TagCompare) {
  PartialTag a;
  PartialTag b;
  EXPECT_TRUE(tags_equal(a, b));
  EXPECT_TRUE(a.is_zero());
  b.bytes[15] = 1;
  EXPECT_FALSE(tags_equal(a, b));
  EXPECT_TRUE((b ^ b).is_zero());
}
