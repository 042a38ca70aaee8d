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

#include "madtls/access.hpp"
#include "madtls/error.hpp"

using namespace madtls;

namespace {

AccessRights random_rights(std::mt19937_64& rng, std::size_t entities, std::size_t contexts) {
  AccessRights r(entities, 0);
  for (std::size_t c = 0; c < contexts; ++c) {
    std::vector<Access> row;
    for (std::size_t m = 0; m + 2 < entities; ++m) row.push_back(static_cast<Access>(rng() % 3));
    r.add_context(row);
  }
  return r;
}

std::map<EntityId, Secret> psks(std::size_t middleboxes) {
  std::map<EntityId, Secret> out;
  for (std::size_t i = 1; i <= middleboxes; ++i) out[EntityId{static_cast<std::uint8_t>(i)}] = Secret(16, static_cast<std::uint8_t>(i));
  return out;
}

}  // namespace

TEST(Access, SenderWritesReceiverHasNoEntry) {
  AccessRights r(4, 0);
  r.add_context({Access::read, Access::none});
  EXPECT_EQ(r.get(ContextId{0}, EntityId{0}), Access::write);
  EXPECT_TRUE(r.has_key(ContextId{0}, EntityId{0}, KeyKind::write));
  EXPECT_TRUE(r.has_key(ContextId{0}, EntityId{1}, KeyKind::read));
  EXPECT_FALSE(r.has_key(ContextId{0}, EntityId{1}, KeyKind::write));
  EXPECT_FALSE(r.has_key(ContextId{0}, EntityId{2}, KeyKind::read));
  EXPECT_FALSE(r.has_key(ContextId{0}, EntityId{3}, KeyKind::read));
  EXPECT_THROW(r.get(ContextId{1}, EntityId{1}), Error);
}

TEST(Access, LayoutValidation) {
  EXPECT_THROW(SegmentationInfo(std::vector<Segment>{}).validate(1), ConfigError);
  EXPECT_THROW(SegmentationInfo({{0, ContextId{0}}}).validate(1), ConfigError);
  EXPECT_THROW(SegmentationInfo({{8, ContextId{2}}}).validate(2), ConfigError);
  const SegmentationInfo ok({{8, ContextId{0}}, {4, ContextId{1}}, {8, ContextId{0}}});
  EXPECT_NO_THROW(ok.validate(2));
  EXPECT_EQ(ok.total_bits(), 20U);
  EXPECT_EQ(ok.bit_offset(2), 12U);
  EXPECT_EQ(ok.context_bit_offset(2), 8U);
  EXPECT_EQ(delta(ok, 1).index, 1);
}

TEST(Access, TemplateTableLimits) {
  TemplateTable t;
  for (int i = 0; i < 64; ++i) t.append(SegmentationInfo({{8, ContextId{0}}}));
  EXPECT_FALSE(t.next_free_id().has_value());
  EXPECT_THROW(t.append(SegmentationInfo({{8, ContextId{0}}})), Error);
  EXPECT_EQ(t.dense().size(), 64U);
}

TEST(Access, PhiIsNearestEarlierHolder) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t e = 2 + rng() % 5;
    const auto rights = random_rights(rng, e, 1 + rng() % 4);
    const auto m = derive_key_matrix(Secret(32, 1), psks(e - 2), Bytes(64, 2), rights);
    for (std::size_t c = 0; c < rights.context_count(); ++c) {
      const ContextId ctx{static_cast<std::uint8_t>(c)};
      for (auto kind : {KeyKind::read, KeyKind::write}) {
        for (std::size_t ent = 1; ent < e; ++ent) {
          if (ent + 1 < e && !rights.has_key(ctx, EntityId{static_cast<std::uint8_t>(ent)}, kind)) {
            EXPECT_THROW(phi_owner(m, ctx, EntityId{static_cast<std::uint8_t>(ent)}, kind), AccessViolation);
            continue;
          }
          // Brute force: walk backwards over the rights table.
          std::size_t expected = 0;
          for (std::size_t k = ent - 1; k > 0; --k)
            if (rights.has_key(ctx, EntityId{static_cast<std::uint8_t>(k)}, kind)) {
              expected = k;
              break;
            }
          EXPECT_EQ(phi_owner(m, ctx, EntityId{static_cast<std::uint8_t>(ent)}, kind).index, expected);
        }
      }
    }
  }
}

TEST(Access, RestrictionMatchesRights) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t e = 3 + rng() % 4;
    const auto rights = random_rights(rng, e, 1 + rng() % 5);
    const auto m = derive_key_matrix(Secret(32, 9), psks(e - 2), Bytes(64, 4), rights);
    for (std::size_t ent = 1; ent + 1 < e; ++ent) {
      const EntityId id{static_cast<std::uint8_t>(ent)};
      const auto keys = restrict_to(m, rights, id);
      for (std::size_t c = 0; c < rights.context_count(); ++c) {
        const ContextId ctx{static_cast<std::uint8_t>(c)};
        const Access a = rights.get(ctx, id);
        const auto* ck = keys.find(ctx);
        if (a == Access::none) {
          EXPECT_TRUE(ck == nullptr || (!ck->read && !ck->write && !ck->enc));
          continue;
        }
        ASSERT_NE(ck, nullptr);
        EXPECT_EQ(ck->read.has_value(), true);
        EXPECT_EQ(ck->write.has_value(), a == Access::write);
        EXPECT_TRUE(ck->enc.has_value());
        EXPECT_EQ(*ck->read, m.key(ctx, id, KeyKind::read));
      }
    }
    const auto recv = restrict_to(m, rights, rights.receiver());
    for (std::size_t c = 0; c < rights.context_count(); ++c) {
      const auto* ck = recv.find(ContextId{static_cast<std::uint8_t>(c)});
      ASSERT_NE(ck, nullptr);
      EXPECT_TRUE(ck->phi_read && ck->phi_write && ck->enc);
      EXPECT_FALSE(ck->read || ck->write);
    }
  }
}

TEST(Access, KeysAreDistinctAndDeterministic) {
  AccessRights r(4, 0);
  r.add_context({Access::write, Access::read});
  r.add_context({Access::read, Access::write});
  const auto a = derive_key_matrix(Secret(32, 1), psks(2), Bytes(64, 2), r);
  const auto b = derive_key_matrix(Secret(32, 1), psks(2), Bytes(64, 2), r);
  EXPECT_EQ(a, b);
  std::set<MacKey> seen;
  std::size_t total = 0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t e = 0; e < 3; ++e)
      for (auto kind : {KeyKind::read, KeyKind::write})
        if (const MacKey* k = a.find(ContextId{static_cast<std::uint8_t>(c)}, EntityId{static_cast<std::uint8_t>(e)}, kind)) {
          seen.insert(*k);
          ++total;
        }
  EXPECT_EQ(seen.size(), total);
  EXPECT_NE(a, derive_key_matrix(Secret(32, 1), psks(2), Bytes(64, 3), r));
}

TEST(Access, MissingPskRejected) {
  AccessRights r(3, 0);
  r.add_context({Access::read});
  EXPECT_THROW(derive_key_matrix(Secret(32, 1), {}, Bytes(64, 2), r), ConfigError);
  EXPECT_NO_THROW(derive_key_matrix(Secret(32, 1), {}, Bytes(64, 2), r, false));
}

TEST(Access, ConfigValidationListsViolations) {
  SessionConfig cfg;
  cfg.middleboxes = {{"a", "10.0.0.2", false}, {"a", "10.0.0.2", false}};
  cfg.rights = AccessRights(4, 0);
  cfg.rights.add_context({Access::read, Access::none});
  cfg.templates.append(SegmentationInfo({{8, ContextId{3}}}));
  try {
    cfg.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
  }
}
