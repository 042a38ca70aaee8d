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

#include "madtls/error.hpp"
#include "madtls/handshake.hpp"
#include "madtls/session.hpp"

using namespace madtls;
using namespace madtls::handshake;

namespace {

HandshakeParticipants two_middleboxes() {
  HandshakeParticipants p;
  p.config.middleboxes = {{"fw", "10.0.0.2", false}, {"ids", "10.0.0.3", true}};
  p.config.rights = AccessRights(4, 0);
  p.config.rights.add_context({Access::read, Access::read});
  p.config.rights.add_context({Access::write, Access::none});
  p.config.templates.append(SegmentationInfo({{16, ContextId{0}}, {16, ContextId{1}}}));
  p.psk_sr = Secret(32, 0x21);
  p.psks_sm = {{EntityId{1}, Secret(16, 1)}, {EntityId{2}, Secret(16, 2)}};
  p.seed = 5;
  return p;
}

}  // namespace

TEST(Handshake, FlightsAndSessionUse) {
  const auto p = two_middleboxes();
  const auto r = run_handshake(p);
  ASSERT_TRUE(r.established) << r.failure;
  EXPECT_EQ(r.flights, 4);
  EXPECT_EQ(r.client->cipher_suite(), suite::kAesGcm);
  EXPECT_EQ(r.server->verified_blobs(), 2U);
  const auto keys = SessionKeys::from_handshake(r);
  Sender sender(keys);
  auto record = sender.protect(BitString::from_hex("01020304"), 0);
  record = MiddleboxNode(keys, EntityId{1}).process(record, {{1, BitString::from_hex("ffff")}}).record;
  record = MiddleboxNode(keys, EntityId{2}).process(record).record;
  EXPECT_TRUE(ReceiverNode(keys).receive(encode_record(record)).accepted);
}

TEST(Handshake, AnySingleBitTamperFails) {
  const auto p = two_middleboxes();
  std::size_t sizes[4][3] = {};
  run_handshake(p, [&](int f, int l, Bytes& d) { sizes[f][l] = d.size(); });
  std::mt19937_64 rng(17);
  for (int flight = 0; flight < 4; ++flight)
    for (int link = 0; link < 3; ++link)
      for (int trial = 0; trial < 40; ++trial) {
        const std::size_t bit = rng() % (sizes[flight][link] * 8);
        const auto r = run_handshake(p, [&](int f, int l, Bytes& d) {
          if (f == flight && l == link) d[bit / 8] ^= static_cast<std::uint8_t>(0x80 >> (bit % 8));
        });
        EXPECT_FALSE(r.established) << "flight " << flight << " link " << link << " bit " << bit;
      }
}

TEST(Handshake, TruncatedOrEmptyFlightFails) {
  const auto p = two_middleboxes();
  for (int flight = 0; flight < 4; ++flight) {
    const auto r = run_handshake(p, [&](int f, int l, Bytes& d) {
      if (f == flight && l == 1) d.resize(d.size() / 2);
    });
    EXPECT_FALSE(r.established);
  }
}

TEST(Handshake, MiddleboxMayStripSuites) {
  auto p = two_middleboxes();
  p.suite_filters[EntityId{1}] = [](std::vector<std::uint16_t>& s) {
    s.erase(std::remove(s.begin(), s.end(), suite::kAesGcm), s.end());
  };
  const auto r = run_handshake(p);
  ASSERT_TRUE(r.established) << r.failure;
  EXPECT_EQ(r.client->cipher_suite(), suite::kChaChaPoly);
  EXPECT_EQ(r.server->cipher_suite(), suite::kChaChaPoly);
}

TEST(Handshake, SuiteReorderingDetected) {
  auto p = two_middleboxes();
  p.suite_filters[EntityId{1}] = [](std::vector<std::uint16_t>& s) { std::reverse(s.begin(), s.end()); };
  EXPECT_FALSE(run_handshake(p).established);
}

TEST(Handshake, NoCommonSuiteFails) {
  auto p = two_middleboxes();
  p.client_suites = {suite::kAesGcm};
  p.server_suites = {suite::kChaChaPoly};
  const auto r = run_handshake(p);
  EXPECT_FALSE(r.established);
  EXPECT_NE(r.failure.find("handshake_failure"), std::string::npos);
}

TEST(Handshake, ServerAdditionsReachEveryone) {
  auto p = two_middleboxes();
  p.additions.contexts = {{Access::none, Access::write}};
  p.additions.templates = {SegmentationInfo({{8, ContextId{2}}})};
  const auto r = run_handshake(p);
  ASSERT_TRUE(r.established) << r.failure;
  EXPECT_EQ(r.client->config().context_count(), 3U);
  EXPECT_EQ(r.client->config().templates.size(), 2U);
  EXPECT_EQ(r.client->keys(), r.server->keys());
  const auto& ids = r.middleboxes[1];
  const auto* ck = ids.keys().find(ContextId{2});
  ASSERT_NE(ck, nullptr);
  EXPECT_TRUE(ck->write.has_value());
  EXPECT_EQ(ids.config().context_count(), 3U);
}

TEST(Handshake, ServerWithoutMiddleboxPsks) {
  auto p = two_middleboxes();
  p.server_knows_middlebox_psks = false;
  const auto r = run_handshake(p);
  ASSERT_TRUE(r.established) << r.failure;
  EXPECT_EQ(r.server->verified_blobs(), 0U);
  EXPECT_EQ(SessionKeys::from_handshake(r).of(r.server->config().rights.receiver()),
            restrict_to(r.client->keys(), r.client->config().rights, r.client->config().rights.receiver()));
}

TEST(Handshake, ClientContextLimit) {
  auto p = two_middleboxes();
  for (int c = 0; c < 62; ++c) p.config.rights.add_context({Access::none, Access::none});
  ASSERT_EQ(p.config.rights.context_count(), 64U);
  EXPECT_FALSE(run_handshake(p).established);
}

TEST(Handshake, PlainDtlsWithoutExtension) {
  HandshakeParticipants p;
  p.config.rights = AccessRights(2, 0);
  p.psk_sr = Secret(32, 3);
  p.madtls = false;
  const auto r = run_handshake(p);
  ASSERT_TRUE(r.established) << r.failure;
  EXPECT_EQ(r.flights, 4);
}

TEST(Handshake, KeyBlobBoundToNonceAndKey) {
  const auto p = two_middleboxes();
  const Bytes nonce(64, 4);
  const auto m = derive_key_matrix(p.psk_sr, p.psks_sm, nonce, p.config.rights);
  const auto blobs = build_key_blobs(m, p.config.rights, nonce, suite::kAesGcm);
  ASSERT_EQ(blobs.size(), 2U);
  const MacKey kd = derive_kd_key(p.psks_sm.at(EntityId{1}), nonce);
  EXPECT_EQ(open_key_blob(blobs[0], kd, p.config.rights, nonce, suite::kAesGcm),
            restrict_to(m, p.config.rights, EntityId{1}));
  EXPECT_THROW(open_key_blob(blobs[0], kd, p.config.rights, Bytes(64, 5), suite::kAesGcm), HandshakeFailure);
  EXPECT_THROW(open_key_blob(blobs[1], kd, p.config.rights, nonce, suite::kAesGcm), HandshakeFailure);
  EXPECT_THROW(open_key_blob(blobs[0], kd, p.config.rights, nonce, suite::kChaChaPoly), HandshakeFailure);
}
