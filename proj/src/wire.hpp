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
#include <span>
#include <string>

#include "madtls/bits.hpp"
#include "madtls/error.hpp"

namespace madtls::wire {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u24(std::uint32_t v) { be(v, 3); }
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void opaque8(std::span<const std::uint8_t> b) {
    if (b.size() > 0xFF) throw ProtocolError("opaque8 overflow");
    u8(static_cast<std::uint8_t>(b.size()));
    bytes(b);
  }
  void opaque16(std::span<const std::uint8_t> b) {
    if (b.size() > 0xFFFF) throw ProtocolError("opaque16 overflow");
    u16(static_cast<std::uint16_t>(b.size()));
    bytes(b);
  }
  Bytes take() { return std::move(out_); }
  const Bytes& data() const { return out_; }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u24() { return static_cast<std::uint32_t>(be(3)); }
  std::uint64_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = v << 8 | in_[pos_++];
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  Bytes opaque8() {
    const auto n = u8();
    auto s = bytes(n);
    return Bytes(s.begin(), s.end());
  }
  Bytes opaque16() {
    const auto n = u16();
    auto s = bytes(n);
    return Bytes(s.begin(), s.end());
  }
  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }
  std::span<const std::uint8_t> input() const { return in_; }
  bool done() const { return pos_ == in_.size(); }
  void expect_done(const char* what) const {
    if (!done()) throw ProtocolError(std::string("trailing bytes in ") + what);
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ProtocolError("truncated message");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace madtls::wire
