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

#include "madtls/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "madtls/error.hpp"

namespace madtls::sim {

namespace {

[[noreturn]] void sys_fail(const char* what) { throw Error(std::string(what) + ": " + std::strerror(errno)); }

constexpr int kReceiveTimeoutMs = 2000;
constexpr std::size_t kMaxDatagram = 65535;

}  // namespace

bool Transport::lose() {
  if (!lossy_ || drop_rate_ <= 0.0) return false;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < drop_rate_;
}

MemoryTransport::MemoryTransport(std::size_t entities, double drop_rate, std::uint64_t seed)
    : Transport(drop_rate, seed), queues_(entities) {}

std::optional<Bytes> MemoryTransport::deliver(std::size_t from, std::size_t to, const Bytes& datagram) {
  (void)from;
  if (lose()) return std::nullopt;
  auto& q = queues_.at(to);
  q.push_back(datagram);
  Bytes out = std::move(q.front());
  q.pop_front();
  return out;
}

DatagramTransport::DatagramTransport(std::size_t entities, double drop_rate, std::uint64_t seed)
    : Transport(drop_rate, seed) {
  for (std::size_t i = 0; i < entities; ++i) {
    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) sys_fail("socket");
    sockets_.push_back(fd);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) sys_fail("bind");
    socklen_t len = sizeof addr;
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) sys_fail("getsockname");
    ports_.push_back(ntohs(addr.sin_port));
  }
}

DatagramTransport::~DatagramTransport() {
  for (int fd : sockets_) ::close(fd);
}

std::optional<Bytes> DatagramTransport::deliver(std::size_t from, std::size_t to, const Bytes& datagram) {
  if (lose()) return std::nullopt;
  sockaddr_in dst{};
  dst.sin_family = AF_INET;
  dst.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  dst.sin_port = htons(ports_.at(to));
  if (::sendto(sockets_.at(from), datagram.data(), datagram.size(), 0, reinterpret_cast<sockaddr*>(&dst), sizeof dst) < 0)
    sys_fail("sendto");
  pollfd p{sockets_.at(to), POLLIN, 0};
  const int ready = ::poll(&p, 1, kReceiveTimeoutMs);
  if (ready < 0) sys_fail("poll");
  if (ready == 0) return std::nullopt;
  Bytes buf(kMaxDatagram);
  const auto n = ::recv(sockets_.at(to), buf.data(), buf.size(), 0);
  if (n < 0) sys_fail("recv");
  buf.resize(static_cast<std::size_t>(n));
  return buf;
}

std::unique_ptr<Transport> make_transport(TransportKind kind, std::size_t entities, double drop_rate,
                                          std::uint64_t seed) {
  if (kind == TransportKind::datagram) return std::make_unique<DatagramTransport>(entities, drop_rate, seed);
  return std::make_unique<MemoryTransport>(entities, drop_rate, seed);
}

}  // namespace madtls::sim
