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

#include "madtls/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>
#include <openssl/sha.h>

#include <memory>

#include "madtls/error.hpp"

namespace madtls {

namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* ctx) const { EVP_PKEY_CTX_free(ctx); }
};

CipherCtx new_cipher_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw std::bad_alloc();
  return ctx;
}

const EVP_CIPHER* aead_cipher(AeadAlgorithm alg) {
  return alg == AeadAlgorithm::aes_256_gcm ? EVP_aes_256_gcm() : EVP_chacha20_poly1305();
}

}  // namespace

bool PartialTag::is_zero() const {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

std::string PartialTag::to_hex() const { return madtls::to_hex(bytes); }

void append_varint(Bytes& out, std::uint64_t value) {
  while (value >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(value | 0x80));
    value >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(value));
}

Bytes mac_encoding(std::span<const std::uint8_t> domain, const BitString& data) {
  Bytes out(domain.begin(), domain.end());
  append_varint(out, data.size());
  out.insert(out.end(), data.bytes().begin(), data.bytes().end());
  return out;
}

PartialTag mac(const MacKey& key, std::span<const std::uint8_t> domain, const BitString& data) {
  ++primitive_counts().mac;
  const Bytes input = mac_encoding(domain, data);
  const auto full = hmac_sha256(key.bytes, input);
  PartialTag tag;
  std::copy_n(full.begin(), kTagSize, tag.bytes.begin());
  return tag;
}

std::array<std::uint8_t, 16> keystream_iv(Nonce nonce, std::uint8_t context_index,
                                          std::uint32_t counter) {
  std::array<std::uint8_t, 16> iv{};
  std::copy(kKeystreamLabel.begin(), kKeystreamLabel.end(), iv.begin());
  iv[4] = static_cast<std::uint8_t>(nonce.epoch >> 8);
  iv[5] = static_cast<std::uint8_t>(nonce.epoch);
  for (int i = 0; i < 6; ++i) iv[6 + i] = static_cast<std::uint8_t>(nonce.sequence >> (8 * (5 - i)));
  iv[12] = context_index;
  iv[13] = static_cast<std::uint8_t>(counter >> 16);
  iv[14] = static_cast<std::uint8_t>(counter >> 8);
  iv[15] = static_cast<std::uint8_t>(counter);
  return iv;
}

BitString keystream_xor(const StreamKey& key, Nonce nonce, std::uint8_t context_index,
                        std::uint64_t bit_offset, const BitString& data) {
  if (bit_offset > kKeystreamSpanBits || data.size() > kKeystreamSpanBits - bit_offset) {
    throw ProtocolError("keystream span exceeded");
  }
  if (nonce.sequence > kMaxSequence) throw ProtocolError("sequence number exceeds 48 bits");
  ++primitive_counts().keystream;
  if (data.empty()) return data;

  const std::uint64_t first_block = bit_offset / 128;
  const std::uint64_t skip = bit_offset % 128;
  const std::size_t ks_bytes = static_cast<std::size_t>((skip + data.size() + 7) / 8);
  const auto iv = keystream_iv(nonce, context_index, static_cast<std::uint32_t>(first_block));

  Bytes zeros(ks_bytes, 0);
  Bytes stream(ks_bytes + 16);
  auto ctx = new_cipher_ctx();
  int len = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr, key.bytes.data(), iv.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), stream.data(), &len, zeros.data(), static_cast<int>(ks_bytes)) != 1) {
    throw std::runtime_error("AES-CTR failure");
  }
  const BitString keystream =
      BitString::from_bytes(std::span(stream.data(), ks_bytes)).slice(static_cast<std::size_t>(skip), data.size());
  return data ^ keystream;
}

KeyBytes kdf(std::span<const std::uint8_t> secret, const std::vector<Bytes>& labels) {
  if (secret.empty()) throw ConfigError("kdf: empty secret");
  ++primitive_counts().kdf;
  Bytes info;
  for (const auto& l : labels) {
    if (l.size() > 0xFFFF) throw ConfigError("kdf: label too long");
    info.push_back(static_cast<std::uint8_t>(l.size() >> 8));
    info.push_back(static_cast<std::uint8_t>(l.size()));
    info.insert(info.end(), l.begin(), l.end());
  }
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> pctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  KeyBytes out{};
  std::size_t out_len = out.size();
  if (!pctx || EVP_PKEY_derive_init(pctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_hkdf_md(pctx.get(), EVP_sha256()) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_salt(pctx.get(), nullptr, 0) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_key(pctx.get(), secret.data(), static_cast<int>(secret.size())) <= 0 ||
      EVP_PKEY_CTX_add1_hkdf_info(pctx.get(), info.data(), static_cast<int>(info.size())) <= 0 ||
      EVP_PKEY_derive(pctx.get(), out.data(), &out_len) <= 0 || out_len != out.size()) {
    throw std::runtime_error("HKDF failure");
  }
  return out;
}

Bytes label(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key,
                                         std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
           out.data(), &len) == nullptr) {
    throw std::runtime_error("HMAC failure");
  }
  return out;
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 32> out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Bytes aead_seal(AeadAlgorithm alg, const KeyBytes& key, std::span<const std::uint8_t> nonce,
                std::span<const std::uint8_t> aad, std::span<const std::uint8_t> plaintext) {
  if (nonce.size() != kAeadNonceSize) throw std::invalid_argument("aead nonce size");
  ++primitive_counts().aead;
  auto ctx = new_cipher_ctx();
  Bytes out(plaintext.size() + kAeadTagSize);
  int len = 0;
  int total = 0;
  if (EVP_EncryptInit_ex(ctx.get(), aead_cipher(alg), nullptr, key.data(), nonce.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    throw std::runtime_error("AEAD seal failure");
  }
  total = len;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, kAeadTagSize,
                          out.data() + plaintext.size()) != 1) {
    throw std::runtime_error("AEAD seal failure");
  }
  return out;
}

std::optional<Bytes> aead_open(AeadAlgorithm alg, const KeyBytes& key,
                               std::span<const std::uint8_t> nonce,
                               std::span<const std::uint8_t> aad,
                               std::span<const std::uint8_t> ciphertext) {
  if (nonce.size() != kAeadNonceSize) throw std::invalid_argument("aead nonce size");
  if (ciphertext.size() < kAeadTagSize) return std::nullopt;
  ++primitive_counts().aead;
  const std::size_t body = ciphertext.size() - kAeadTagSize;
  Bytes tag(ciphertext.begin() + static_cast<std::ptrdiff_t>(body), ciphertext.end());
  Bytes out(body + 16);
  auto ctx = new_cipher_ctx();
  int len = 0;
  if (EVP_DecryptInit_ex(ctx.get(), aead_cipher(alg), nullptr, key.data(), nonce.data()) != 1 ||
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(), static_cast<int>(body)) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, kAeadTagSize, tag.data()) != 1) {
    return std::nullopt;
  }
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &final_len) != 1) return std::nullopt;
  out.resize(body);
  return out;
}

bool tags_equal(const PartialTag& a, const PartialTag& b) {
  return CRYPTO_memcmp(a.bytes.data(), b.bytes.data(), kTagSize) == 0;
}

PrimitiveCounts& primitive_counts() {
  thread_local PrimitiveCounts counts;
  return counts;
}

}  // namespace madtls
