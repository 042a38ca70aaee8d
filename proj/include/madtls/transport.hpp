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
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "madtls/bits.hpp"
#include "madtls/scenario.hpp"

namespace madtls::sim {

/// Carries one datagram between two entities. Returns nullopt when the
/// datagram is lost.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::optional<Bytes> deliver(std::size_t from, std::size_t to, const Bytes& datagram) = 0;
  /// Enables or suspends random loss (the handshake runs loss-free).
  void set_lossy(bool lossy) { lossy_ = lossy; }

 protected:
  Transport(double drop_rate, std::uint64_t seed) : drop_rate_(drop_rate), rng_(seed) {}
  bool lose();

 private:
  double drop_rate_;
  bool lossy_ = true;
  std::mt19937_64 rng_;
};

/// Seeded queue network: one FIFO per entity.
class MemoryTransport final : public Transport {
 public:
  MemoryTransport(std::size_t entities, double drop_rate, std::uint64_t seed);
  std::optional<Bytes> deliver(std::size_t from, std::size_t to, const Bytes& datagram) override;

 private:
  std::vector<std::deque<Bytes>> queues_;
};

/// UDP sockets on 127.0.0.1, one per entity.
class DatagramTransport final : public Transport {
 public:
  DatagramTransport(std::size_t entities, double drop_rate, std::uint64_t seed);
  ~DatagramTransport() override;
  DatagramTransport(const DatagramTransport&) = delete;
  DatagramTransport& operator=(const DatagramTransport&) = delete;

  std::optional<Bytes> deliver(std::size_t from, std::size_t to, const Bytes& datagram) override;
  std::uint16_t port(std::size_t entity) const { return ports_.at(entity); }

 private:
  std::vector<int> sockets_;
  std::vector<std::uint16_t> ports_;
};

std::unique_ptr<Transport> make_transport(TransportKind kind, std::size_t entities, double drop_rate,
                                          std::uint64_t seed);

}  // namespace madtls::sim
