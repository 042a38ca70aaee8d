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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace madtls {

using Bytes = std::vector<std::uint8_t>;

/// Bit-granular buffer. Bits are stored MSB-first; padding bits in the last
/// byte are always zero so that byte-wise equality is bit-wise equality.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t bit_length);

  static BitString from_bytes(std::span<const std::uint8_t> bytes);
  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_length);
  /// Parses a string of '0'/'1' characters.
  static BitString from_bits(std::string_view bits);
  static BitString from_hex(std::string_view hex);

  std::size_t size() const { return bits_; }
  std::size_t byte_size() const { return bytes_.size(); }
  bool empty() const { return bits_ == 0; }
  std::span<const std::uint8_t> bytes() const { return bytes_; }

  bool bit(std::size_t i) const;
  void set_bit(std::size_t i, bool value);
  void flip(std::size_t i);

  BitString slice(std::size_t offset, std::size_t length) const;
  void append(const BitString& other);

  std::string to_bits() const;
  std::string to_hex() const;

  BitString& operator^=(const BitString& other);
  friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }
  friend bool operator==(const BitString&, const BitString&) = default;
  friend auto operator<=>(const BitString&, const BitString&) = default;

 private:
  void clear_padding();

  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

}  // namespace madtls
