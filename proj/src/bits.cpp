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

#include "madtls/bits.hpp"

#include <stdexcept>

#include "madtls/error.hpp"

namespace madtls {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

BitString::BitString(std::size_t bit_length) : bytes_((bit_length + 7) / 8), bits_(bit_length) {}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes) {
  return from_bytes(bytes, bytes.size() * 8);
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_length) {
  if (bit_length > bytes.size() * 8) throw std::invalid_argument("bit length exceeds buffer");
  BitString out;
  out.bits_ = bit_length;
  out.bytes_.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>((bit_length + 7) / 8));
  out.clear_padding();
  return out;
}

BitString BitString::from_bits(std::string_view bits) {
  BitString out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw std::invalid_argument("bit string must be 0/1");
    out.set_bit(i, bits[i] == '1');
  }
  return out;
}

BitString BitString::from_hex(std::string_view hex) { return from_bytes(madtls::from_hex(hex)); }

bool BitString::bit(std::size_t i) const {
  if (i >= bits_) throw std::out_of_range("bit index");
  return (bytes_[i / 8] >> (7 - i % 8)) & 1U;
}

void BitString::set_bit(std::size_t i, bool value) {
  if (i >= bits_) throw std::out_of_range("bit index");
  const auto mask = static_cast<std::uint8_t>(0x80U >> (i % 8));
  if (value) {
    bytes_[i / 8] |= mask;
  } else {
    bytes_[i / 8] &= static_cast<std::uint8_t>(~mask);
  }
}

void BitString::flip(std::size_t i) {
  if (i >= bits_) throw std::out_of_range("bit index");
  bytes_[i / 8] ^= static_cast<std::uint8_t>(0x80U >> (i % 8));
}

BitString BitString::slice(std::size_t offset, std::size_t length) const {
  if (offset + length > bits_) throw std::out_of_range("slice");
  BitString out(length);
  if (offset % 8 == 0) {
    for (std::size_t i = 0; i < out.bytes_.size(); ++i) out.bytes_[i] = bytes_[offset / 8 + i];
    out.clear_padding();
    return out;
  }
  for (std::size_t i = 0; i < length; ++i) out.set_bit(i, bit(offset + i));
  return out;
}

void BitString::append(const BitString& other) {
  if (bits_ % 8 == 0) {
    bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
    bits_ += other.bits_;
    return;
  }
  const std::size_t start = bits_;
  bits_ += other.bits_;
  bytes_.resize((bits_ + 7) / 8);
  for (std::size_t i = 0; i < other.bits_; ++i) set_bit(start + i, other.bit(i));
}

std::string BitString::to_bits() const {
  std::string out;
  out.reserve(bits_);
  for (std::size_t i = 0; i < bits_; ++i) out.push_back(bit(i) ? '1' : '0');
  return out;
}

std::string BitString::to_hex() const { return madtls::to_hex(bytes_); }

BitString& BitString::operator^=(const BitString& other) {
  if (other.bits_ != bits_) throw std::invalid_argument("xor of unequal bit lengths");
  for (std::size_t i = 0; i < bytes_.size(); ++i) bytes_[i] ^= other.bytes_[i];
  return *this;
}

void BitString::clear_padding() {
  if (bits_ % 8 != 0) {
    bytes_.back() &= static_cast<std::uint8_t>(0xFFU << (8 - bits_ % 8));
  }
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ProtocolError("odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ProtocolError("invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace madtls
