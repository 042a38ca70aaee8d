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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "madtls/access.hpp"
#include "madtls/bits.hpp"
#include "madtls/crypto.hpp"

namespace madtls::handshake {

/// PSK suites offering per-segment AES-256-CTR + HMAC-SHA256; they differ in
/// the AEAD protecting key blobs.
namespace suite {
inline constexpr std::uint16_t kAesGcm = 0xFF1E;
inline constexpr std::uint16_t kChaChaPoly = 0xFF1F;
}  // namespace suite

bool is_supported(std::uint16_t cipher_suite);
AeadAlgorithm blob_aead(std::uint16_t cipher_suite);

namespace msg {
inline constexpr std::uint8_t kClientHello = 1;
inline constexpr std::uint8_t kServerHello = 2;
inline constexpr std::uint8_t kServerHelloDone = 14;
inline constexpr std::uint8_t kClientKeyExchange = 16;
inline constexpr std::uint8_t kFinished = 20;
}  // namespace msg

inline constexpr std::uint16_t kExtensionType = 0xFF1E;
inline constexpr std::size_t kRandomSize = 32;
inline constexpr std::size_t kVerifyDataSize = 12;
/// Limit for contexts announced by the client; the server may add one more.
inline constexpr std::size_t kMaxClientContexts = 63;

/// MADTLS hello extension. The middlebox list is only present in the
/// ClientHello; the ServerHello replays contexts and templates.
struct HelloExtension {
  std::vector<MiddleboxInfo> middleboxes;
  std::vector<std::vector<Access>> contexts;  // [context][middlebox]
  std::vector<SegmentationInfo> templates;    // id = position

  Bytes encode(bool with_middleboxes) const;
  static HelloExtension decode(std::span<const std::uint8_t> body, bool with_middleboxes,
                               std::size_t middlebox_count);
  friend bool operator==(const HelloExtension&, const HelloExtension&) = default;
};

HelloExtension extension_from_config(const SessionConfig& config);
SessionConfig config_from_extension(const HelloExtension& ext);

struct ClientHello {
  std::array<std::uint8_t, kRandomSize> random{};
  Bytes cookie;
  std::vector<std::uint16_t> cipher_suites;
  std::optional<HelloExtension> extension;
  friend bool operator==(const ClientHello&, const ClientHello&) = default;
};

struct ServerHello {
  std::array<std::uint8_t, kRandomSize> random{};
  std::uint16_t cipher_suite = 0;
  std::vector<std::uint16_t> offered_as_received;
  std::optional<HelloExtension> extension;
  friend bool operator==(const ServerHello&, const ServerHello&) = default;
};

struct KeyBlob {
  EntityId target;
  Bytes ciphertext;
  friend bool operator==(const KeyBlob&, const KeyBlob&) = default;
};

struct ClientKeyExchange {
  Bytes psk_identity;
  std::vector<KeyBlob> blobs;
  friend bool operator==(const ClientKeyExchange&, const ClientKeyExchange&) = default;
};

/// Handshake message: DTLS header (type, length, message_seq, fragment) + body.
struct Message {
  std::uint8_t type = 0;
  std::uint16_t message_seq = 0;
  Bytes body;
};

Bytes encode_message(const Message& m);
Message decode_message(std::span<const std::uint8_t> wire);

Bytes encode_body(const ClientHello& m);
Bytes encode_body(const ServerHello& m, std::size_t middlebox_count);
Bytes encode_body(const ClientKeyExchange& m);
ClientHello decode_client_hello(std::span<const std::uint8_t> body);
ServerHello decode_server_hello(std::span<const std::uint8_t> body, std::size_t middlebox_count);
ClientKeyExchange decode_client_key_exchange(std::span<const std::uint8_t> body);

/// One flight: handshake messages (encoded) plus whether a ChangeCipherSpec
/// precedes the trailing Finished.
struct Flight {
  std::vector<Bytes> messages;
  bool change_cipher_spec = false;
  std::uint64_t first_sequence = 0;  // record sequence of the first record
};

/// Wire datagram: one DTLS record per message, CCS as content type 0x14.
Bytes encode_flight(const Flight& flight);
Flight decode_flight(std::span<const std::uint8_t> datagram);

/// Key-blob plaintext for `target`: own read keys, own write keys, φ read,
/// φ write (each ascending context), then encryption keys of accessible contexts.
Bytes blob_plaintext(const KeyMatrix& matrix, const AccessRights& rights, EntityId target);
EntityKeys parse_blob_plaintext(std::span<const std::uint8_t> plaintext, const AccessRights& rights,
                                EntityId target);

std::vector<KeyBlob> build_key_blobs(const KeyMatrix& matrix, const AccessRights& rights,
                                     std::span<const std::uint8_t> handshake_nonce, std::uint16_t cipher_suite);
/// Throws HandshakeFailure when the blob does not authenticate.
EntityKeys open_key_blob(const KeyBlob& blob, const MacKey& kd_key, const AccessRights& rights,
                         std::span<const std::uint8_t> handshake_nonce, std::uint16_t cipher_suite);

enum class Phase : std::uint8_t { idle, hello_sent, hello_received, keys_distributed, established };
const char* to_string(Phase phase);

struct ServerAdditions {
  std::vector<std::vector<Access>> contexts;
  std::vector<SegmentationInfo> templates;
};

using RandomSource = std::function<void(std::span<std::uint8_t>)>;
/// Seeded deterministic randomness for simulations and tests.
RandomSource seeded_random(std::uint64_t seed);

class ClientSession {
 public:
  ClientSession(SessionConfig config, Secret psk_sr, Bytes psk_identity, std::map<EntityId, Secret> psks_sm,
                RandomSource random, std::vector<std::uint16_t> offered = {suite::kAesGcm, suite::kChaChaPoly},
                Bytes cookie = {}, bool madtls = true);

  Flight start();
  Flight on_server_flight(const Flight& flight);
  void on_server_finished(const Flight& flight);

  Phase phase() const { return phase_; }
  const SessionConfig& config() const { return config_; }
  const KeyMatrix& keys() const { return keys_; }
  const Bytes& handshake_nonce() const { return nonce_; }
  std::uint16_t cipher_suite() const { return suite_; }

 private:
  SessionConfig config_;
  Secret psk_sr_;
  Bytes identity_;
  std::map<EntityId, Secret> psks_sm_;
  RandomSource random_;
  std::vector<std::uint16_t> offered_;
  Bytes cookie_;
  bool madtls_;
  Phase phase_ = Phase::idle;
  ClientHello hello_;
  Bytes transcript_;
  Bytes nonce_;
  KeyMatrix keys_;
  std::uint16_t suite_ = 0;
  KeyBytes master_{};
  std::uint16_t next_seq_ = 0;
};

class ServerSession {
 public:
  ServerSession(std::map<Bytes, Secret> psks_by_identity, RandomSource random,
                std::vector<std::uint16_t> supported = {suite::kAesGcm, suite::kChaChaPoly},
                ServerAdditions additions = {}, std::map<std::string, Secret> middlebox_psks = {});

  Flight on_client_hello(const Flight& flight);
  Flight on_client_flight(const Flight& flight);

  Phase phase() const { return phase_; }
  const SessionConfig& config() const { return config_; }
  const KeyMatrix& keys() const { return keys_; }
  const Bytes& handshake_nonce() const { return nonce_; }
  std::uint16_t cipher_suite() const { return suite_; }
  /// Number of key-distribution keys checked against the received blobs.
  std::size_t verified_blobs() const { return verified_blobs_; }

 private:
  std::map<Bytes, Secret> psks_;
  RandomSource random_;
  std::vector<std::uint16_t> supported_;
  ServerAdditions additions_;
  std::map<std::string, Secret> middlebox_psks_;
  Phase phase_ = Phase::idle;
  SessionConfig config_;
  Bytes transcript_;
  Bytes nonce_;
  std::array<std::uint8_t, kRandomSize> client_random_{};
  KeyMatrix keys_;
  std::uint16_t suite_ = 0;
  std::size_t verified_blobs_ = 0;
  std::uint16_t next_seq_ = 0;
};

/// On-path view of the handshake. Middleboxes learn the session from the
/// hellos and extract their own blob from the ClientKeyExchange.
class MiddleboxSession {
 public:
  using SuiteFilter = std::function<void(std::vector<std::uint16_t>&)>;

  MiddleboxSession(std::string address, Secret psk_sm, SuiteFilter filter = {});

  /// May rewrite the offered cipher suites.
  Flight on_client_hello(const Flight& flight);
  void on_server_hello(const Flight& flight);
  void on_key_exchange(const Flight& flight);
  void on_server_finished(const Flight& flight);

  Phase phase() const { return phase_; }
  EntityId entity() const { return entity_; }
  const SessionConfig& config() const { return config_; }
  const EntityKeys& keys() const { return keys_; }

 private:
  std::string address_;
  Secret psk_;
  SuiteFilter filter_;
  Phase phase_ = Phase::idle;
  EntityId entity_;
  SessionConfig config_;
  std::array<std::uint8_t, kRandomSize> client_random_{};
  Bytes nonce_;
  std::uint16_t suite_ = 0;
  EntityKeys keys_;
  std::size_t client_middlebox_count_ = 0;
};

struct HandshakeParticipants {
  SessionConfig config;
  Secret psk_sr;
  Bytes psk_identity = label("client");
  std::map<EntityId, Secret> psks_sm;
  ServerAdditions additions;
  bool server_knows_middlebox_psks = true;
  std::vector<std::uint16_t> client_suites = {suite::kAesGcm, suite::kChaChaPoly};
  std::vector<std::uint16_t> server_suites = {suite::kAesGcm, suite::kChaChaPoly};
  std::map<EntityId, MiddleboxSession::SuiteFilter> suite_filters;
  Bytes cookie;
  bool madtls = true;
  std::uint64_t seed = 1;
};

/// Called on every flight datagram as it crosses a link; `link` counts hops in
/// travel direction (0 = leaving the originator).
using FlightTamper = std::function<void(int flight_index, int link, Bytes& datagram)>;

struct HandshakeResult {
  bool established = false;
  std::string failure;
  int flights = 0;
  std::optional<ClientSession> client;
  std::optional<ServerSession> server;
  std::vector<MiddleboxSession> middleboxes;
};

/// Drives all four flights along the path sender → middleboxes → receiver.
HandshakeResult run_handshake(const HandshakeParticipants& participants, const FlightTamper& tamper = {});

}  // namespace madtls::handshake
