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

#include "madtls/error.hpp"
#include "madtls/session.hpp"
#include "madtls/tag_oracle.hpp"

using namespace madtls;

namespace {

SessionConfig three_hop_config() {
  SessionConfig cfg;
  cfg.middleboxes = {{"ids", "10.0.0.2", true}, {"nav", "10.0.0.3", false}, {"log", "10.0.0.4", true}};
  cfg.rights = AccessRights(5, 0);
  cfg.rights.add_context({Access::read, Access::write, Access::none});
  cfg.rights.add_context({Access::read, Access::none, Access::read});
  cfg.templates.append(SegmentationInfo({{48, ContextId{0}}, {112, ContextId{1}}}));
  return cfg;
}

std::map<EntityId, Secret> mb_psks(std::size_t n) {
  std::map<EntityId, Secret> out;
  for (std::size_t i = 1; i <= n; ++i) out[EntityId{static_cast<std::uint8_t>(i)}] = Secret(16, static_cast<std::uint8_t>(i));
  return out;
}

}  // namespace

TEST(Session, HonestPathVerifiesAndMatchesOracle) {
  const Bytes nonce(64, 7);
  const auto keys = SessionKeys::derive(three_hop_config(), Secret(32, 1), mb_psks(3), nonce);
  Sender sender(keys);
  const BitString plain = BitString::from_hex("00112233445566778899aabbccddeeff00112233");
  auto record = sender.protect(plain, 0);
  ASSERT_EQ(record.self_verify_tags.size(), 2U);

  TagOracle oracle(keys.matrix, keys.config.rights, record.layout, MacBinding::of(record.header));
  oracle.sender(split_segments(record.ciphertext, record.layout));
  EXPECT_EQ(oracle.value().value, record.main_tag);

  for (std::uint8_t e = 1; e <= 3; ++e) {
    MiddleboxNode mb(keys, EntityId{e});
    SegmentEdits edits;
    if (e == 2) edits[0] = BitString::from_hex("a1a2a3a4a5a6");
    const auto before = split_segments(record.ciphertext, record.layout);
    auto out = mb.process(record, edits);
    ASSERT_EQ(out.status, HopOutcome::Status::forwarded);
    if (mb.self_verifying()) {
      EXPECT_TRUE(out.self_verified.value_or(false));
    }
    record = out.record;
    oracle.hop(EntityId{e}, before, split_segments(record.ciphertext, record.layout));
    EXPECT_EQ(oracle.value().value, record.main_tag);
  }
  ReceiverNode receiver(keys);
  const auto result = receiver.receive(encode_record(record));
  EXPECT_TRUE(result.accepted) << result.reason;
  EXPECT_EQ(result.plaintext.slice(0, 48).to_hex(), "a1a2a3a4a5a6");
  EXPECT_FALSE(receiver.receive(encode_record(record)).accepted);
}

TEST(Handshake, HonestThreeMiddleboxes) {
  handshake::HandshakeParticipants p;
  p.config = three_hop_config();
  p.psk_sr = Secret(32, 1);
  p.psks_sm = mb_psks(3);
  const auto result = handshake::run_handshake(p);
  ASSERT_TRUE(result.established) << result.failure;
  EXPECT_EQ(result.flights, 4);
  EXPECT_EQ(result.client->keys(), result.server->keys());
  for (const auto& mb : result.middleboxes)
    EXPECT_EQ(mb.keys(), restrict_to(result.client->keys(), p.config.rights, mb.entity()));
}
