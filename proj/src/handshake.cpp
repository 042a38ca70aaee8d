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

#include "madtls/handshake.hpp"

#include <algorithm>
#include <memory>

#include "madtls/error.hpp"
#include "madtls/record.hpp"
#include "wire.hpp"

namespace madtls::handshake {

namespace {

constexpr std::uint8_t kChangeCipherSpecType = 0x14;

void require(bool condition, const std::string& what) {
  if (!condition) throw HandshakeFailure(what);
}

Bytes make_nonce(std::span<const std::uint8_t> client_random, std::span<const std::uint8_t> server_random) {
  Bytes n(client_random.begin(), client_random.end());
  n.insert(n.end(), server_random.begin(), server_random.end());
  return n;
}

KeyBytes master_secret(const Secret& psk, const Bytes& nonce) { return kdf(psk, {nonce, label("master secret")}); }

std::array<std::uint8_t, kVerifyDataSize> verify_data(const KeyBytes& master, std::string_view which,
                                                      const Bytes& transcript) {
  const auto digest = sha256(transcript);
  Bytes input = label(which);
  input.insert(input.end(), digest.begin(), digest.end());
  const auto full = hmac_sha256(master, input);
  std::array<std::uint8_t, kVerifyDataSize> out{};
  std::copy_n(full.begin(), kVerifyDataSize, out.begin());
  return out;
}

std::array<std::uint8_t, kAeadNonceSize> blob_nonce(std::span<const std::uint8_t> hs_nonce, EntityId target) {
  std::array<std::uint8_t, kAeadNonceSize> n{};
  std::copy_n(hs_nonce.begin(), kAeadNonceSize - 1, n.begin());
  n[kAeadNonceSize - 1] = target.index;
  return n;
}

std::array<std::uint8_t, 3> blob_aad(EntityId target, std::uint16_t suite) {
  return {target.index, static_cast<std::uint8_t>(suite >> 8), static_cast<std::uint8_t>(suite)};
}

void encode_rights_row(wire::Writer& w, const std::vector<Access>& row) {
  Bytes bitmap((row.size() * 2 + 7) / 8, 0);
  for (std::size_t m = 0; m < row.size(); ++m) {
    const auto v = static_cast<std::uint8_t>(row[m]);
    bitmap[m / 4] |= static_cast<std::uint8_t>(v << (6 - 2 * (m % 4)));
  }
  w.bytes(bitmap);
}

std::vector<Access> decode_rights_row(wire::Reader& r, std::size_t middleboxes) {
  const auto bitmap = r.bytes((middleboxes * 2 + 7) / 8);
  std::vector<Access> row(middleboxes);
  for (std::size_t m = 0; m < middleboxes; ++m) {
    const auto v = (bitmap[m / 4] >> (6 - 2 * (m % 4))) & 0x3;
    if (v == 3) throw ProtocolError("invalid rights encoding");
    row[m] = static_cast<Access>(v);
  }
  // Unused trailing bits must be zero.
  const std::size_t used = middleboxes * 2;
  if (used % 8 != 0 && (bitmap.back() & (0xFF >> (used % 8))) != 0) throw ProtocolError("non-zero rights padding");
  return row;
}

Message expect(const Flight& flight, std::size_t i, std::uint8_t type, std::uint16_t message_seq) {
  require(i < flight.messages.size(), "flight is missing a handshake message");
  Message m = decode_message(flight.messages[i]);
  require(m.type == type, "unexpected handshake message type");
  require(m.message_seq == message_seq, "unexpected handshake message sequence");
  return m;
}

void expect_records(const Flight& flight, std::uint64_t first_sequence) {
  require(flight.first_sequence == first_sequence, "unexpected record sequence number");
}

/// True iff `sub` is `full` with zero or more entries removed.
bool is_subsequence(const std::vector<std::uint16_t>& sub, const std::vector<std::uint16_t>& full) {
  auto it = full.begin();
  for (auto s : sub) {
    it = std::find(it, full.end(), s);
    if (it == full.end()) return false;
    ++it;
  }
  return true;
}

std::vector<std::uint16_t> decode_suites(wire::Reader& r) {
  const auto len = r.u16();
  if (len % 2 != 0) throw ProtocolError("odd cipher suite list length");
  std::vector<std::uint16_t> out;
  for (std::size_t i = 0; i < len / 2U; ++i) out.push_back(r.u16());
  return out;
}

void encode_suites(wire::Writer& w, const std::vector<std::uint16_t>& suites) {
  w.u16(static_cast<std::uint16_t>(suites.size() * 2));
  for (auto s : suites) w.u16(s);
}

Bytes finished_message(std::uint16_t seq, const std::array<std::uint8_t, kVerifyDataSize>& data) {
  return encode_message({msg::kFinished, seq, Bytes(data.begin(), data.end())});
}

bool access_prefix_matches(const HelloExtension& client, const HelloExtension& server) {
  if (server.contexts.size() < client.contexts.size() || server.templates.size() < client.templates.size())
    return false;
  return std::equal(client.contexts.begin(), client.contexts.end(), server.contexts.begin()) &&
         std::equal(client.templates.begin(), client.templates.end(), server.templates.begin());
}

}  // namespace

bool is_supported(std::uint16_t cipher_suite) {
  return cipher_suite == suite::kAesGcm || cipher_suite == suite::kChaChaPoly;
}

AeadAlgorithm blob_aead(std::uint16_t cipher_suite) {
  if (cipher_suite == suite::kAesGcm) return AeadAlgorithm::aes_256_gcm;
  if (cipher_suite == suite::kChaChaPoly) return AeadAlgorithm::chacha20_poly1305;
  throw HandshakeFailure("unsupported cipher suite");
}

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::idle: return "idle";
    case Phase::hello_sent: return "hello_sent";
    case Phase::hello_received: return "hello_received";
    case Phase::keys_distributed: return "keys_distributed";
    case Phase::established: return "established";
  }
  return "?";
}

Bytes HelloExtension::encode(bool with_middleboxes) const {
  wire::Writer w;
  if (with_middleboxes) {
    if (middleboxes.size() > kMaxEntities - 2) throw ConfigError("too many middleboxes");
    w.u8(static_cast<std::uint8_t>(middleboxes.size()));
    for (const auto& mb : middleboxes) {
      w.u8(mb.self_verify ? 1 : 0);
      w.opaque8(label(mb.address));
      w.opaque8(label(mb.name));
    }
  }
  if (contexts.size() > kMaxContexts) throw ConfigError("more than 64 contexts");
  if (templates.size() > kMaxTemplates) throw ConfigError("more than 64 templates");
  w.u8(static_cast<std::uint8_t>(contexts.size()));
  for (const auto& row : contexts) encode_rights_row(w, row);
  w.u8(static_cast<std::uint8_t>(templates.size()));
  for (const auto& t : templates) {
    w.bytes(encode_layout(t));
    w.u8(0x00);
  }
  return w.take();
}

HelloExtension HelloExtension::decode(std::span<const std::uint8_t> body, bool with_middleboxes,
                                      std::size_t middlebox_count) {
  wire::Reader r(body);
  HelloExtension ext;
  if (with_middleboxes) {
    const auto n = r.u8();
    for (std::size_t i = 0; i < n; ++i) {
      MiddleboxInfo mb;
      const auto flags = r.u8();
      if (flags > 1) throw ProtocolError("unknown middlebox flags");
      mb.self_verify = flags == 1;
      const Bytes addr = r.opaque8();
      const Bytes name = r.opaque8();
      mb.address.assign(addr.begin(), addr.end());
      mb.name.assign(name.begin(), name.end());
      ext.middleboxes.push_back(std::move(mb));
    }
    middlebox_count = n;
  }
  const auto contexts = r.u8();
  if (contexts > kMaxContexts) throw ProtocolError("more than 64 contexts");
  for (std::size_t c = 0; c < contexts; ++c) ext.contexts.push_back(decode_rights_row(r, middlebox_count));
  const auto templates = r.u8();
  if (templates > kMaxTemplates) throw ProtocolError("more than 64 templates");
  for (std::size_t t = 0; t < templates; ++t) {
    std::size_t pos = r.pos();
    SegmentationInfo layout = decode_layout(r.input(), pos);
    r.set_pos(pos);
    if (r.u8() != 0x00) throw ProtocolError("template not null-terminated");
    ext.templates.push_back(std::move(layout));
  }
  r.expect_done("hello extension");
  return ext;
}

HelloExtension extension_from_config(const SessionConfig& config) {
  HelloExtension ext;
  ext.middleboxes = config.middleboxes;
  for (std::size_t c = 0; c < config.context_count(); ++c) {
    std::vector<Access> row;
    for (std::size_t m = 1; m + 1 < config.entity_count(); ++m)
      row.push_back(config.rights.get(ContextId{static_cast<std::uint8_t>(c)}, EntityId{static_cast<std::uint8_t>(m)}));
    ext.contexts.push_back(std::move(row));
  }
  ext.templates = config.templates.dense();
  return ext;
}

SessionConfig config_from_extension(const HelloExtension& ext) {
  SessionConfig cfg;
  cfg.middleboxes = ext.middleboxes;
  cfg.rights = AccessRights(ext.middleboxes.size() + 2, 0);
  for (const auto& row : ext.contexts) cfg.rights.add_context(row);
  for (const auto& t : ext.templates) cfg.templates.append(t);
  cfg.validate();
  return cfg;
}

Bytes encode_message(const Message& m) {
  wire::Writer w;
  if (m.body.size() > 0xFFFFFF) throw ProtocolError("handshake message too long");
  w.u8(m.type);
  w.u24(static_cast<std::uint32_t>(m.body.size()));
  w.u16(m.message_seq);
  w.u24(0);
  w.u24(static_cast<std::uint32_t>(m.body.size()));
  w.bytes(m.body);
  return w.take();
}

Message decode_message(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  Message m;
  m.type = r.u8();
  const auto len = r.u24();
  m.message_seq = r.u16();
  const auto frag_off = r.u24();
  const auto frag_len = r.u24();
  if (frag_off != 0 || frag_len != len) throw ProtocolError("fragmented handshake messages are unsupported");
  const auto body = r.bytes(len);
  m.body.assign(body.begin(), body.end());
  r.expect_done("handshake message");
  return m;
}

Bytes encode_body(const ClientHello& m) {
  wire::Writer w;
  w.u16(kDtls12Version);
  w.bytes(m.random);
  w.opaque8({});
  w.opaque8(m.cookie);
  encode_suites(w, m.cipher_suites);
  w.u8(1);
  w.u8(0);
  if (m.extension) {
    if (m.extension->contexts.size() > kMaxClientContexts) throw ConfigError("more than 63 contexts in ClientHello");
    const Bytes ext = m.extension->encode(true);
    w.u16(static_cast<std::uint16_t>(ext.size() + 4));
    w.u16(kExtensionType);
    w.opaque16(ext);
  }
  return w.take();
}

ClientHello decode_client_hello(std::span<const std::uint8_t> body) {
  wire::Reader r(body);
  ClientHello m;
  if (r.u16() != kDtls12Version) throw ProtocolError("unsupported version");
  const auto random = r.bytes(kRandomSize);
  std::copy(random.begin(), random.end(), m.random.begin());
  if (!r.opaque8().empty()) throw ProtocolError("session resumption is unsupported");
  m.cookie = r.opaque8();
  m.cipher_suites = decode_suites(r);
  const Bytes compression = r.opaque8();
  if (compression != Bytes{0}) throw ProtocolError("compression is unsupported");
  if (!r.done()) {
    const auto total = r.u16();
    const auto type = r.u16();
    const Bytes ext = r.opaque16();
    if (type != kExtensionType || total != ext.size() + 4) throw ProtocolError("unknown hello extension");
    m.extension = HelloExtension::decode(ext, true, 0);
  }
  r.expect_done("ClientHello");
  return m;
}

Bytes encode_body(const ServerHello& m, std::size_t middlebox_count) {
  (void)middlebox_count;
  wire::Writer w;
  w.u16(kDtls12Version);
  w.bytes(m.random);
  w.opaque8({});
  w.u16(m.cipher_suite);
  w.u8(0);
  if (m.extension) {
    wire::Writer body;
    encode_suites(body, m.offered_as_received);
    body.bytes(m.extension->encode(false));
    const Bytes ext = body.take();
    w.u16(static_cast<std::uint16_t>(ext.size() + 4));
    w.u16(kExtensionType);
    w.opaque16(ext);
  }
  return w.take();
}

ServerHello decode_server_hello(std::span<const std::uint8_t> body, std::size_t middlebox_count) {
  wire::Reader r(body);
  ServerHello m;
  if (r.u16() != kDtls12Version) throw ProtocolError("unsupported version");
  const auto random = r.bytes(kRandomSize);
  std::copy(random.begin(), random.end(), m.random.begin());
  if (!r.opaque8().empty()) throw ProtocolError("session resumption is unsupported");
  m.cipher_suite = r.u16();
  if (r.u8() != 0) throw ProtocolError("compression is unsupported");
  if (!r.done()) {
    const auto total = r.u16();
    const auto type = r.u16();
    const Bytes ext = r.opaque16();
    if (type != kExtensionType || total != ext.size() + 4) throw ProtocolError("unknown hello extension");
    wire::Reader er(ext);
    m.offered_as_received = decode_suites(er);
    m.extension = HelloExtension::decode(ext.size() > er.pos() ? std::span(ext).subspan(er.pos())
                                                               : std::span<const std::uint8_t>{},
                                         false, middlebox_count);
  }
  r.expect_done("ServerHello");
  return m;
}

Bytes encode_body(const ClientKeyExchange& m) {
  wire::Writer w;
  w.opaque16(m.psk_identity);
  if (m.blobs.size() > 0xFF) throw ProtocolError("too many key blobs");
  w.u8(static_cast<std::uint8_t>(m.blobs.size()));
  for (const auto& b : m.blobs) {
    w.u8(b.target.index);
    w.opaque16(b.ciphertext);
  }
  return w.take();
}

ClientKeyExchange decode_client_key_exchange(std::span<const std::uint8_t> body) {
  wire::Reader r(body);
  ClientKeyExchange m;
  m.psk_identity = r.opaque16();
  const auto n = r.u8();
  for (std::size_t i = 0; i < n; ++i) {
    KeyBlob b;
    b.target = EntityId{r.u8()};
    b.ciphertext = r.opaque16();
    m.blobs.push_back(std::move(b));
  }
  r.expect_done("ClientKeyExchange");
  return m;
}

Bytes encode_flight(const Flight& flight) {
  wire::Writer w;
  std::uint64_t seq = flight.first_sequence;
  std::uint16_t epoch = 0;
  auto record = [&](std::uint8_t type, std::span<const std::uint8_t> payload) {
    w.u8(type);
    w.u16(kDtls12Version);
    w.u16(epoch);
    w.be(seq++, 6);
    w.opaque16(payload);
  };
  for (std::size_t i = 0; i < flight.messages.size(); ++i) {
    if (flight.change_cipher_spec && i + 1 == flight.messages.size()) {
      const std::uint8_t ccs = 1;
      record(kChangeCipherSpecType, std::span(&ccs, 1));
      epoch = 1;
    }
    record(content_type::kHandshake, flight.messages[i]);
  }
  return w.take();
}

Flight decode_flight(std::span<const std::uint8_t> datagram) {
  wire::Reader r(datagram);
  Flight f;
  bool first = true;
  std::uint64_t next = 0;
  while (!r.done()) {
    const auto type = r.u8();
    if (r.u16() != kDtls12Version) throw ProtocolError("unsupported record version");
    const auto epoch = r.u16();
    const auto seq = r.be(6);
    const Bytes payload = r.opaque16();
    if (epoch != (f.change_cipher_spec ? 1 : 0)) throw ProtocolError("unexpected record epoch");
    if (!first && seq != next) throw ProtocolError("non-consecutive record sequence numbers");
    if (first) f.first_sequence = seq;
    first = false;
    next = seq + 1;
    if (type == kChangeCipherSpecType) {
      if (payload != Bytes{1}) throw ProtocolError("malformed ChangeCipherSpec");
      f.change_cipher_spec = true;
    } else if (type == content_type::kHandshake) {
      f.messages.push_back(payload);
    }
    // Records of other content types are discarded, as in DTLS.
  }
  return f;
}

Bytes blob_plaintext(const KeyMatrix& matrix, const AccessRights& rights, EntityId target) {
  const auto column = rights.column(target);
  std::vector<ContextId> readable;
  std::vector<ContextId> writable;
  for (std::size_t c = 0; c < column.size(); ++c) {
    const ContextId ctx{static_cast<std::uint8_t>(c)};
    if (column[c] != Access::none) readable.push_back(ctx);
    if (column[c] == Access::write) writable.push_back(ctx);
  }
  Bytes out;
  auto put = [&](const KeyBytes& k) { out.insert(out.end(), k.begin(), k.end()); };
  for (auto c : readable) put(matrix.key(c, target, KeyKind::read).bytes);
  for (auto c : writable) put(matrix.key(c, target, KeyKind::write).bytes);
  for (auto c : readable) put(phi(matrix, c, target, KeyKind::read).bytes);
  for (auto c : writable) put(phi(matrix, c, target, KeyKind::write).bytes);
  for (auto c : readable) put(matrix.enc(c).bytes);
  return out;
}

EntityKeys parse_blob_plaintext(std::span<const std::uint8_t> plaintext, const AccessRights& rights,
                                EntityId target) {
  const auto column = rights.column(target);
  std::vector<ContextId> readable;
  std::vector<ContextId> writable;
  for (std::size_t c = 0; c < column.size(); ++c) {
    const ContextId ctx{static_cast<std::uint8_t>(c)};
    if (column[c] != Access::none) readable.push_back(ctx);
    if (column[c] == Access::write) writable.push_back(ctx);
  }
  const std::size_t expected = (3 * readable.size() + 2 * writable.size()) * kKeySize;
  if (plaintext.size() != expected) throw HandshakeFailure("key blob has unexpected size");
  std::size_t pos = 0;
  auto next = [&] {
    KeyBytes k{};
    std::copy_n(plaintext.begin() + static_cast<std::ptrdiff_t>(pos), kKeySize, k.begin());
    pos += kKeySize;
    return k;
  };
  EntityKeys keys{target, {}};
  for (auto c : readable) {
    auto& ck = keys.contexts[c];
    ck.access = column[c.index];
    ck.read = MacKey{next()};
  }
  for (auto c : writable) keys.contexts[c].write = MacKey{next()};
  for (auto c : readable) keys.contexts[c].phi_read = MacKey{next()};
  for (auto c : writable) keys.contexts[c].phi_write = MacKey{next()};
  for (auto c : readable) keys.contexts[c].enc = StreamKey{next()};
  return keys;
}

std::vector<KeyBlob> build_key_blobs(const KeyMatrix& matrix, const AccessRights& rights,
                                     std::span<const std::uint8_t> hs_nonce, std::uint16_t cipher_suite) {
  std::vector<KeyBlob> blobs;
  for (std::size_t e = 1; e + 1 < rights.entity_count(); ++e) {
    const EntityId mb{static_cast<std::uint8_t>(e)};
    const auto column = rights.column(mb);
    if (std::all_of(column.begin(), column.end(), [](Access a) { return a == Access::none; })) continue;
    const MacKey* kd = matrix.kd(mb);
    if (kd == nullptr) throw ConfigError("no key-distribution key for middlebox " + std::to_string(e));
    const Bytes plain = blob_plaintext(matrix, rights, mb);
    const auto nonce = blob_nonce(hs_nonce, mb);
    const auto aad = blob_aad(mb, cipher_suite);
    blobs.push_back({mb, aead_seal(blob_aead(cipher_suite), kd->bytes, nonce, aad, plain)});
  }
  return blobs;
}

EntityKeys open_key_blob(const KeyBlob& blob, const MacKey& kd_key, const AccessRights& rights,
                         std::span<const std::uint8_t> hs_nonce, std::uint16_t cipher_suite) {
  const auto nonce = blob_nonce(hs_nonce, blob.target);
  const auto aad = blob_aad(blob.target, cipher_suite);
  auto plain = aead_open(blob_aead(cipher_suite), kd_key.bytes, nonce, aad, blob.ciphertext);
  if (!plain) throw HandshakeFailure("key blob failed authentication");
  return parse_blob_plaintext(*plain, rights, blob.target);
}

RandomSource seeded_random(std::uint64_t seed) {
  auto engine = std::make_shared<std::mt19937_64>(seed);
  return [engine](std::span<std::uint8_t> out) {
    for (auto& b : out) b = static_cast<std::uint8_t>((*engine)() & 0xFF);
  };
}

// --- client -----------------------------------------------------------------

ClientSession::ClientSession(SessionConfig config, Secret psk_sr, Bytes psk_identity,
                             std::map<EntityId, Secret> psks_sm, RandomSource random,
                             std::vector<std::uint16_t> offered, Bytes cookie, bool madtls)
    : config_(std::move(config)),
      psk_sr_(std::move(psk_sr)),
      identity_(std::move(psk_identity)),
      psks_sm_(std::move(psks_sm)),
      random_(std::move(random)),
      offered_(std::move(offered)),
      cookie_(std::move(cookie)),
      madtls_(madtls) {
  if (madtls_) config_.validate();
}

Flight ClientSession::start() {
  if (phase_ != Phase::idle) throw HandshakeFailure("handshake already started");
  random_(hello_.random);
  hello_.cookie = cookie_;
  hello_.cipher_suites = offered_;
  if (madtls_) hello_.extension = extension_from_config(config_);
  Flight f;
  f.messages.push_back(encode_message({msg::kClientHello, next_seq_++, encode_body(hello_)}));
  phase_ = Phase::hello_sent;
  return f;
}

Flight ClientSession::on_server_flight(const Flight& flight) {
  require(phase_ == Phase::hello_sent, "unexpected ServerHello");
  expect_records(flight, 0);
  const Message sh_msg = expect(flight, 0, msg::kServerHello, 0);
  const Message done_msg = expect(flight, 1, msg::kServerHelloDone, 1);
  require(done_msg.body.empty(), "malformed ServerHelloDone");
  const ServerHello sh = decode_server_hello(sh_msg.body, config_.middleboxes.size());

  require(std::find(offered_.begin(), offered_.end(), sh.cipher_suite) != offered_.end(),
          "server selected a suite that was not offered");
  ClientHello canonical = hello_;
  if (madtls_) {
    require(sh.extension.has_value(), "server did not acknowledge the MADTLS extension");
    require(is_subsequence(sh.offered_as_received, offered_), "offered suite list was altered beyond removal");
    require(std::find(sh.offered_as_received.begin(), sh.offered_as_received.end(), sh.cipher_suite) !=
                sh.offered_as_received.end(),
            "selected suite not in the received offer");
    canonical.cipher_suites = sh.offered_as_received;
    require(access_prefix_matches(*hello_.extension, *sh.extension), "server altered announced contexts");
    HelloExtension merged = *sh.extension;
    merged.middleboxes = config_.middleboxes;
    config_ = config_from_extension(merged);
  } else {
    require(!sh.extension.has_value(), "unexpected extension");
  }
  suite_ = sh.cipher_suite;

  transcript_ = encode_message({msg::kClientHello, 0, encode_body(canonical)});
  transcript_.insert(transcript_.end(), flight.messages[0].begin(), flight.messages[0].end());
  transcript_.insert(transcript_.end(), flight.messages[1].begin(), flight.messages[1].end());

  nonce_ = make_nonce(hello_.random, sh.random);
  ClientKeyExchange cke;
  cke.psk_identity = identity_;
  if (madtls_) {
    keys_ = derive_key_matrix(psk_sr_, psks_sm_, nonce_, config_.rights);
    cke.blobs = build_key_blobs(keys_, config_.rights, nonce_, suite_);
  }
  const Bytes cke_msg = encode_message({msg::kClientKeyExchange, next_seq_++, encode_body(cke)});
  transcript_.insert(transcript_.end(), cke_msg.begin(), cke_msg.end());

  master_ = master_secret(psk_sr_, nonce_);
  const Bytes fin = finished_message(next_seq_++, verify_data(master_, "client finished", transcript_));
  transcript_.insert(transcript_.end(), fin.begin(), fin.end());

  phase_ = Phase::keys_distributed;
  Flight out;
  out.messages = {cke_msg, fin};
  out.change_cipher_spec = true;
  out.first_sequence = 1;
  return out;
}

void ClientSession::on_server_finished(const Flight& flight) {
  require(phase_ == Phase::keys_distributed, "unexpected server Finished");
  require(flight.change_cipher_spec, "missing ChangeCipherSpec");
  expect_records(flight, 2);
  const Message fin = expect(flight, 0, msg::kFinished, 2);
  const auto expected = verify_data(master_, "server finished", transcript_);
  require(fin.body == Bytes(expected.begin(), expected.end()), "server Finished verification failed");
  phase_ = Phase::established;
}

// --- server -----------------------------------------------------------------

ServerSession::ServerSession(std::map<Bytes, Secret> psks_by_identity, RandomSource random,
                             std::vector<std::uint16_t> supported, ServerAdditions additions,
                             std::map<std::string, Secret> middlebox_psks)
    : psks_(std::move(psks_by_identity)),
      random_(std::move(random)),
      supported_(std::move(supported)),
      additions_(std::move(additions)),
      middlebox_psks_(std::move(middlebox_psks)) {}

Flight ServerSession::on_client_hello(const Flight& flight) {
  require(phase_ == Phase::idle, "unexpected ClientHello");
  require(flight.messages.size() == 1, "ClientHello flight must hold one message");
  expect_records(flight, 0);
  const Message ch_msg = expect(flight, 0, msg::kClientHello, 0);
  const ClientHello ch = decode_client_hello(ch_msg.body);
  client_random_ = ch.random;

  suite_ = 0;
  for (auto s : ch.cipher_suites) {
    if (std::find(supported_.begin(), supported_.end(), s) != supported_.end()) {
      suite_ = s;
      break;
    }
  }
  require(suite_ != 0, "handshake_failure: no mutually supported cipher suite");

  ServerHello sh;
  random_(sh.random);
  sh.cipher_suite = suite_;
  if (ch.extension) {
    HelloExtension ext = *ch.extension;
    for (const auto& row : additions_.contexts) {
      require(row.size() == ext.middleboxes.size(), "server context row does not match middlebox count");
      ext.contexts.push_back(row);
    }
    for (const auto& t : additions_.templates) ext.templates.push_back(t);
    require(ext.contexts.size() <= kMaxContexts, "handshake_failure: more than 64 contexts");
    require(ext.templates.size() <= kMaxTemplates, "handshake_failure: more than 64 templates");
    try {
      config_ = config_from_extension(ext);
    } catch (const ConfigError& e) {
      throw HandshakeFailure(std::string("handshake_failure: ") + e.what());
    }
    ext.middleboxes.clear();
    sh.offered_as_received = ch.cipher_suites;
    sh.extension = std::move(ext);
  } else {
    config_.rights = AccessRights(2, 0);
  }

  transcript_ = flight.messages[0];
  const Bytes sh_msg = encode_message({msg::kServerHello, next_seq_++, encode_body(sh, config_.middleboxes.size())});
  const Bytes done = encode_message({msg::kServerHelloDone, next_seq_++, {}});
  transcript_.insert(transcript_.end(), sh_msg.begin(), sh_msg.end());
  transcript_.insert(transcript_.end(), done.begin(), done.end());
  nonce_ = make_nonce(ch.random, sh.random);
  phase_ = Phase::hello_received;

  Flight out;
  out.messages = {sh_msg, done};
  return out;
}

Flight ServerSession::on_client_flight(const Flight& flight) {
  require(phase_ == Phase::hello_received, "unexpected client key exchange");
  require(flight.change_cipher_spec, "missing ChangeCipherSpec");
  expect_records(flight, 1);
  const Message cke_msg = expect(flight, 0, msg::kClientKeyExchange, 1);
  const Message fin_msg = expect(flight, 1, msg::kFinished, 2);
  const ClientKeyExchange cke = decode_client_key_exchange(cke_msg.body);

  auto psk = psks_.find(cke.psk_identity);
  require(psk != psks_.end(), "unknown PSK identity");

  const bool madtls = config_.entity_count() > 2 || config_.context_count() > 0;
  if (madtls) {
    std::map<EntityId, Secret> known;
    for (std::size_t i = 0; i < config_.middleboxes.size(); ++i) {
      auto it = middlebox_psks_.find(config_.middleboxes[i].address);
      if (it != middlebox_psks_.end()) known.emplace(EntityId{static_cast<std::uint8_t>(i + 1)}, it->second);
    }
    keys_ = derive_key_matrix(psk->second, known, nonce_, config_.rights, false);

    for (std::size_t e = 1; e + 1 < config_.entity_count(); ++e) {
      const EntityId mb{static_cast<std::uint8_t>(e)};
      const auto column = config_.rights.column(mb);
      const bool entitled = std::any_of(column.begin(), column.end(), [](Access a) { return a != Access::none; });
      const auto blob = std::find_if(cke.blobs.begin(), cke.blobs.end(), [&](const KeyBlob& b) { return b.target == mb; });
      require(entitled == (blob != cke.blobs.end()), "key blob set does not match access rights");
      const MacKey* kd = keys_.kd(mb);
      if (!entitled || kd == nullptr) continue;
      const EntityKeys opened = open_key_blob(*blob, *kd, config_.rights, nonce_, suite_);
      require(opened == restrict_to(keys_, config_.rights, mb), "key blob contents do not match derived keys");
      ++verified_blobs_;
    }
  }

  transcript_.insert(transcript_.end(), flight.messages[0].begin(), flight.messages[0].end());
  const KeyBytes master = master_secret(psk->second, nonce_);
  const auto expected = verify_data(master, "client finished", transcript_);
  require(fin_msg.body == Bytes(expected.begin(), expected.end()), "client Finished verification failed");
  transcript_.insert(transcript_.end(), flight.messages[1].begin(), flight.messages[1].end());

  const Bytes fin = finished_message(next_seq_++, verify_data(master, "server finished", transcript_));
  phase_ = Phase::established;
  Flight out;
  out.messages = {fin};
  out.change_cipher_spec = true;
  out.first_sequence = 2;
  return out;
}

// --- middlebox --------------------------------------------------------------

MiddleboxSession::MiddleboxSession(std::string address, Secret psk_sm, SuiteFilter filter)
    : address_(std::move(address)), psk_(std::move(psk_sm)), filter_(std::move(filter)) {}

Flight MiddleboxSession::on_client_hello(const Flight& flight) {
  require(phase_ == Phase::idle, "middlebox saw a second ClientHello");
  require(flight.messages.size() == 1, "ClientHello flight must hold one message");
  expect_records(flight, 0);
  Message m = expect(flight, 0, msg::kClientHello, 0);
  ClientHello ch = decode_client_hello(m.body);
  require(ch.extension.has_value(), "session is not middlebox-aware");
  const auto& mbs = ch.extension->middleboxes;
  auto it = std::find_if(mbs.begin(), mbs.end(), [&](const MiddleboxInfo& i) { return i.address == address_; });
  require(it != mbs.end(), "middlebox not listed in ClientHello");
  entity_ = EntityId{static_cast<std::uint8_t>(it - mbs.begin() + 1)};
  client_middlebox_count_ = mbs.size();
  config_.middleboxes = mbs;
  client_random_ = ch.random;
  phase_ = Phase::hello_sent;

  Flight out = flight;
  if (filter_) {
    filter_(ch.cipher_suites);
    m.body = encode_body(ch);
    out.messages[0] = encode_message(m);
  }
  return out;
}

void MiddleboxSession::on_server_hello(const Flight& flight) {
  require(phase_ == Phase::hello_sent, "unexpected ServerHello at middlebox");
  expect_records(flight, 0);
  const Message sh_msg = expect(flight, 0, msg::kServerHello, 0);
  const ServerHello sh = decode_server_hello(sh_msg.body, client_middlebox_count_);
  require(sh.extension.has_value(), "server dropped the MADTLS extension");
  HelloExtension merged = *sh.extension;
  merged.middleboxes = config_.middleboxes;
  config_ = config_from_extension(merged);
  suite_ = sh.cipher_suite;
  nonce_ = make_nonce(client_random_, sh.random);
  phase_ = Phase::hello_received;
}

void MiddleboxSession::on_key_exchange(const Flight& flight) {
  require(phase_ == Phase::hello_received, "unexpected ClientKeyExchange at middlebox");
  expect_records(flight, 1);
  const Message cke_msg = expect(flight, 0, msg::kClientKeyExchange, 1);
  const ClientKeyExchange cke = decode_client_key_exchange(cke_msg.body);
  const auto column = config_.rights.column(entity_);
  const bool entitled = std::any_of(column.begin(), column.end(), [](Access a) { return a != Access::none; });
  const auto blob = std::find_if(cke.blobs.begin(), cke.blobs.end(), [&](const KeyBlob& b) { return b.target == entity_; });
  if (entitled) {
    require(blob != cke.blobs.end(), "no key blob for this middlebox");
    keys_ = open_key_blob(*blob, derive_kd_key(psk_, nonce_), config_.rights, nonce_, suite_);
  } else {
    keys_ = EntityKeys{entity_, {}};
  }
  phase_ = Phase::keys_distributed;
}

void MiddleboxSession::on_server_finished(const Flight& flight) {
  require(phase_ == Phase::keys_distributed, "unexpected server Finished at middlebox");
  require(flight.change_cipher_spec && !flight.messages.empty(), "malformed final flight");
  expect_records(flight, 2);
  expect(flight, 0, msg::kFinished, 2);
  phase_ = Phase::established;
}

// --- driver -----------------------------------------------------------------

HandshakeResult run_handshake(const HandshakeParticipants& p, const FlightTamper& tamper) {
  HandshakeResult result;
  const std::size_t m = p.madtls ? p.config.middleboxes.size() : 0;

  std::map<Bytes, Secret> identities{{p.psk_identity, p.psk_sr}};
  std::map<std::string, Secret> mb_psks;
  if (p.server_knows_middlebox_psks) {
    for (const auto& [id, secret] : p.psks_sm)
      if (id.index >= 1 && id.index <= p.config.middleboxes.size())
        mb_psks.emplace(p.config.middleboxes[id.index - 1].address, secret);
  }

  auto rng = seeded_random(p.seed);
  result.client.emplace(p.config, p.psk_sr, p.psk_identity, p.psks_sm, rng, p.client_suites, p.cookie, p.madtls);
  result.server.emplace(identities, rng, p.server_suites, p.additions, mb_psks);
  for (std::size_t i = 0; i < m; ++i) {
    const EntityId id{static_cast<std::uint8_t>(i + 1)};
    auto psk = p.psks_sm.find(id);
    auto filter = p.suite_filters.find(id);
    result.middleboxes.emplace_back(p.config.middleboxes[i].address,
                                    psk == p.psks_sm.end() ? Secret{} : psk->second,
                                    filter == p.suite_filters.end() ? MiddleboxSession::SuiteFilter{} : filter->second);
  }

  auto& client = *result.client;
  auto& server = *result.server;
  auto& mbs = result.middleboxes;
  int flight_index = 0;

  // Sends `flight` across every link; `visit(k, flight)` runs at the k-th middlebox
  // in travel order and may replace the flight.
  auto travel = [&](const Flight& flight, bool forward,
                    const std::function<Flight(std::size_t, const Flight&)>& visit) {
    Bytes datagram = encode_flight(flight);
    for (std::size_t link = 0; link <= m; ++link) {
      if (tamper) tamper(flight_index, static_cast<int>(link), datagram);
      if (link == m) break;
      const std::size_t mb = forward ? link : m - 1 - link;
      datagram = encode_flight(visit(mb, decode_flight(datagram)));
    }
    ++flight_index;
    ++result.flights;
    return decode_flight(datagram);
  };

  try {
    const Flight f1 = travel(client.start(), true,
                             [&](std::size_t k, const Flight& f) { return mbs[k].on_client_hello(f); });
    const Flight f2 = travel(server.on_client_hello(f1), false, [&](std::size_t k, const Flight& f) {
      mbs[k].on_server_hello(f);
      return f;
    });
    const Flight f3 = travel(client.on_server_flight(f2), true, [&](std::size_t k, const Flight& f) {
      mbs[k].on_key_exchange(f);
      return f;
    });
    const Flight f4 = travel(server.on_client_flight(f3), false, [&](std::size_t k, const Flight& f) {
      mbs[k].on_server_finished(f);
      return f;
    });
    client.on_server_finished(f4);
  } catch (const Error& e) {
    result.failure = e.what();
    return result;
  }
  result.established = client.phase() == Phase::established && server.phase() == Phase::established &&
                       std::all_of(mbs.begin(), mbs.end(), [](const MiddleboxSession& s) {
                         return s.phase() == Phase::established;
                       });
  if (!result.established) result.failure = "not all parties reached the established phase";
  return result;
}

}  // namespace madtls::handshake
