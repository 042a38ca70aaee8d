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

#include "madtls/vectors.hpp"

#include <random>
#include <sstream>

#include "madtls/error.hpp"
#include "madtls/session.hpp"

namespace madtls {

namespace {

struct Fixture {
  std::uint64_t seed;
  Secret psk_sr;
  std::map<EntityId, Secret> psks_sm;
  Bytes nonce;
  SessionConfig config;
};

Bytes seeded_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

Fixture fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Fixture f{seed, seeded_bytes(rng, 32), {}, {}, {}};
  f.psks_sm[EntityId{1}] = seeded_bytes(rng, 32);
  f.psks_sm[EntityId{2}] = seeded_bytes(rng, 32);
  f.nonce = seeded_bytes(rng, 64);
  f.config.middleboxes = {{"m1", "192.0.2.1", false}, {"m2", "192.0.2.2", true}};
  f.config.rights = AccessRights(4, 0);
  f.config.rights.add_context({Access::read, Access::write});
  f.config.rights.add_context({Access::write, Access::none});
  f.config.templates.append(SegmentationInfo({{24, ContextId{0}}, {40, ContextId{1}}}));
  return f;
}

const SegmentationInfo kInlineLayout({{5, ContextId{1}}, {11, ContextId{0}}, {16, ContextId{1}}});

std::string join_labels(const std::vector<Bytes>& labels) {
  std::string out;
  for (const auto& l : labels) out += (out.empty() ? "" : ":") + to_hex(l);
  return out;
}

std::vector<Bytes> split_labels(const std::string& text) {
  std::vector<Bytes> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ':')) out.push_back(from_hex(part));
  return out;
}

std::vector<std::vector<Bytes>> kdf_inputs(const Fixture& f) {
  return {{label("master secret")}, {f.nonce, label("encrypt")}, {label("a"), label("bc"), Bytes{0x00, 0xFF}}};
}

std::string key_label(const char* kind, std::size_t c, std::size_t e) {
  return std::string("key.") + kind + ".c" + std::to_string(c) + ".e" + std::to_string(e);
}

/// Record i: plaintext and the edits each middlebox applies.
struct RecordPlan {
  BitString plaintext;
  bool inline_layout;
  SegmentEdits m1;
  SegmentEdits m2;
};

std::vector<RecordPlan> plans(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5EC7'0B5EULL);
  auto bits = [&](std::size_t n) {
    BitString b(n);
    for (std::size_t i = 0; i < n; ++i) b.set_bit(i, (rng() & 1U) != 0);
    return b;
  };
  std::vector<RecordPlan> out;
  out.push_back({bits(64), false, {{1, bits(40)}}, {{0, bits(24)}}});
  out.push_back({bits(64), false, {}, {}});
  out.push_back({bits(32), true, {{0, bits(5)}, {2, bits(16)}}, {{1, bits(11)}}});
  return out;
}

}  // namespace

std::optional<std::string> VectorFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  return std::nullopt;
}

std::string VectorFile::to_text() const {
  std::ostringstream out;
  out << "# madtls golden vectors\n";
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  return out.str();
}

VectorFile VectorFile::parse(const std::string& text) {
  VectorFile f;
  std::stringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ProtocolError("vector line " + std::to_string(number) + " lacks ' = '");
    f.add(line.substr(0, eq), line.substr(eq + 3));
  }
  return f;
}

VectorFile generate_vectors(std::uint64_t seed) {
  const Fixture f = fixture(seed);
  VectorFile out;
  out.add("seed", std::to_string(seed));
  out.add("psk_sr", to_hex(f.psk_sr));
  out.add("handshake_nonce", to_hex(f.nonce));

  const auto inputs = kdf_inputs(f);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out.add("kdf." + std::to_string(i) + ".labels", join_labels(inputs[i]));
    out.add("kdf." + std::to_string(i) + ".out", to_hex(kdf(f.psk_sr, inputs[i])));
  }

  const auto keys = SessionKeys::derive(f.config, f.psk_sr, f.psks_sm, f.nonce);
  for (std::size_t c = 0; c < keys.config.context_count(); ++c) {
    const ContextId ctx{static_cast<std::uint8_t>(c)};
    out.add("key.enc.c" + std::to_string(c), to_hex(keys.matrix.enc(ctx).bytes));
    for (std::size_t e = 0; e + 1 < keys.config.entity_count(); ++e) {
      const EntityId ent{static_cast<std::uint8_t>(e)};
      if (const MacKey* k = keys.matrix.find(ctx, ent, KeyKind::read)) out.add(key_label("read", c, e), to_hex(k->bytes));
      if (const MacKey* k = keys.matrix.find(ctx, ent, KeyKind::write)) out.add(key_label("write", c, e), to_hex(k->bytes));
    }
  }

  Sender sender(keys);
  const MiddleboxNode m1(keys, EntityId{1});
  const MiddleboxNode m2(keys, EntityId{2});
  const auto all = plans(seed);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& plan = all[i];
    const std::string p = "record." + std::to_string(i) + ".";
    auto record = plan.inline_layout ? sender.protect(plan.plaintext, kInlineLayout) : sender.protect(plan.plaintext, 0);
    out.add(p + "plaintext", plan.plaintext.to_hex());
    out.add(p + "sender", to_hex(encode_record(record)));
    record = m1.process(record, plan.m1).record;
    out.add(p + "m1", to_hex(encode_record(record)));
    record = m2.process(record, plan.m2).record;
    out.add(p + "m2", to_hex(encode_record(record)));
  }
  return out;
}

VectorCheck replay_vectors(const VectorFile& file) {
  VectorCheck check;
  auto seed_text = file.get("seed");
  if (!seed_text) {
    check.failures.emplace_back("missing seed");
    return check;
  }
  std::uint64_t seed = 0;
  try {
    seed = std::stoull(*seed_text);
  } catch (const std::exception&) {
    check.failures.emplace_back("malformed seed");
    return check;
  }
  const Fixture f = fixture(seed);
  auto expect = [&](const std::string& key, const std::string& actual) {
    ++check.checked;
    auto stored = file.get(key);
    if (!stored) check.failures.push_back(key + ": missing");
    else if (*stored != actual) check.failures.push_back(key + ": mismatch");
  };
  expect("psk_sr", to_hex(f.psk_sr));
  expect("handshake_nonce", to_hex(f.nonce));

  for (std::size_t i = 0;; ++i) {
    auto labels = file.get("kdf." + std::to_string(i) + ".labels");
    if (!labels) break;
    try {
      expect("kdf." + std::to_string(i) + ".out", to_hex(kdf(f.psk_sr, split_labels(*labels))));
    } catch (const Error& e) {
      check.failures.push_back("kdf." + std::to_string(i) + ": " + e.what());
    }
  }

  const auto keys = SessionKeys::derive(f.config, f.psk_sr, f.psks_sm, f.nonce);
  const VectorFile reference = generate_vectors(seed);
  for (const auto& [k, v] : reference.entries)
    if (k.rfind("key.", 0) == 0) expect(k, v);

  const MiddleboxNode m1(keys, EntityId{1});
  const MiddleboxNode m2(keys, EntityId{2});
  ReceiverNode receiver(keys);
  Sender sender(keys);
  const auto all = plans(seed);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::string p = "record." + std::to_string(i) + ".";
    auto sender_hex = file.get(p + "sender");
    auto m1_hex = file.get(p + "m1");
    auto m2_hex = file.get(p + "m2");
    auto plain_hex = file.get(p + "plaintext");
    if (!sender_hex || !m1_hex || !m2_hex || !plain_hex) {
      check.failures.push_back(p + "*: missing");
      continue;
    }
    try {
      const auto& plan = all[i];
      const auto emitted = plan.inline_layout ? sender.protect(plan.plaintext, kInlineLayout)
                                              : sender.protect(plan.plaintext, 0);
      expect(p + "sender", to_hex(encode_record(emitted)));
      expect(p + "plaintext", plan.plaintext.to_hex());
      const auto stage0 = decode_record(from_hex(*sender_hex), keys.config.templates);
      expect(p + "m1", to_hex(encode_record(m1.process(stage0, all[i].m1).record)));
      const auto stage1 = decode_record(from_hex(*m1_hex), keys.config.templates);
      expect(p + "m2", to_hex(encode_record(m2.process(stage1, all[i].m2).record)));
      const auto result = receiver.receive(from_hex(*m2_hex));
      ++check.checked;
      if (!result.accepted) {
        check.failures.push_back(p + "m2: receiver rejects (" + result.reason + ")");
        continue;
      }
      const auto& layout = plan.inline_layout ? kInlineLayout : *keys.config.templates.find(0);
      auto segments = split_segments(BitString::from_bytes(from_hex(*plain_hex), layout.total_bits()), layout);
      for (const auto* edits : {&plan.m1, &plan.m2})
        for (const auto& [index, value] : *edits) segments[index] = value;
      ++check.checked;
      if (join_segments(segments) != result.plaintext) check.failures.push_back(p + "m2: plaintext mismatch");
    } catch (const Error& e) {
      check.failures.push_back(p + ": " + e.what());
    }
  }
  return check;
}

}  // namespace madtls
