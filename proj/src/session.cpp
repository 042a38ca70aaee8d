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

#include "madtls/session.hpp"

#include <algorithm>

#include "madtls/error.hpp"

namespace madtls {

namespace {

Segments split(const ProtectedRecord& record) { return split_segments(record.ciphertext, record.layout); }

}  // namespace

SessionKeys SessionKeys::derive(SessionConfig config, const Secret& psk_sr, const std::map<EntityId, Secret>& psks_sm,
                                std::span<const std::uint8_t> handshake_nonce) {
  config.validate();
  SessionKeys s;
  s.matrix = derive_key_matrix(psk_sr, psks_sm, handshake_nonce, config.rights);
  for (std::size_t e = 0; e < config.entity_count(); ++e)
    s.entities.push_back(restrict_to(s.matrix, config.rights, EntityId{static_cast<std::uint8_t>(e)}));
  s.config = std::move(config);
  return s;
}

SessionKeys SessionKeys::from_handshake(const handshake::HandshakeResult& result) {
  if (!result.established || !result.client || !result.server)
    throw HandshakeFailure("handshake did not complete: " + result.failure);
  SessionKeys s;
  s.config = result.client->config();
  s.matrix = result.client->keys();
  const auto& rights = s.config.rights;
  s.entities.push_back(restrict_to(s.matrix, rights, EntityId{0}));
  for (const auto& mb : result.middleboxes) s.entities.push_back(mb.keys());
  s.entities.push_back(restrict_to(result.server->keys(), rights, rights.receiver()));
  return s;
}

bool ReplayWindow::fresh(std::uint64_t sequence) const {
  if (!any_ || sequence > top_) return true;
  const std::uint64_t age = top_ - sequence;
  if (age >= kSize) return false;
  return ((bitmap_ >> age) & 1U) == 0;
}

void ReplayWindow::mark(std::uint64_t sequence) {
  if (!any_) {
    any_ = true;
    top_ = sequence;
    bitmap_ = 1;
    return;
  }
  if (sequence > top_) {
    const std::uint64_t shift = sequence - top_;
    bitmap_ = shift >= kSize ? 0 : bitmap_ << shift;
    bitmap_ |= 1;
    top_ = sequence;
    return;
  }
  const std::uint64_t age = top_ - sequence;
  if (age < kSize) bitmap_ |= std::uint64_t{1} << age;
}

Sender::Sender(const SessionKeys& keys, std::uint16_t epoch) : keys_(keys), epoch_(epoch) {}

ProtectedRecord Sender::protect(const BitString& plaintext, std::uint8_t template_id) {
  const SegmentationInfo* layout = keys_.config.templates.find(template_id);
  if (layout == nullptr) throw ConfigError("unknown template id " + std::to_string(template_id));
  RecordHeader h;
  h.epoch = epoch_;
  h.sequence = next_sequence_;
  h.template_id = template_id;
  auto record = protect_at(h, *layout, plaintext);
  ++next_sequence_;
  return record;
}

ProtectedRecord Sender::protect(const BitString& plaintext, const SegmentationInfo& layout) {
  RecordHeader h;
  h.epoch = epoch_;
  h.sequence = next_sequence_;
  h.l_flag = true;
  auto record = protect_at(h, layout, plaintext);
  ++next_sequence_;
  return record;
}

ProtectedRecord Sender::protect_at(const RecordHeader& header, const SegmentationInfo& layout,
                                   const BitString& plaintext) const {
  layout.validate(keys_.config.context_count());
  if (plaintext.size() != layout.total_bits()) throw ConfigError("plaintext length does not match the layout");
  if (header.sequence > kMaxSequence) throw ProtocolError("sequence number exhausted");
  ProtectedRecord r;
  r.header = header;
  r.layout = layout;
  r.ciphertext = encrypt_segments(plaintext, layout, keys_.matrix, header.nonce());
  const auto binding = MacBinding::of(header);
  const Segments segments = split(r);
  const auto view = make_view(keys_.of(EntityId{0}), layout, keys_.config.entity_count());
  const SenderPartials partials = sender_partials(binding, segments, view);
  r.main_tag = partials.aggregate().value;
  for (EntityId target : keys_.config.self_verifying())
    r.self_verify_tags.push_back({target, partials.selfverify(layout, keys_.config.rights.column(target))});
  r.header.m_flag = !r.self_verify_tags.empty();
  return r;
}

const char* to_string(SelfVerifyPolicy policy) {
  switch (policy) {
    case SelfVerifyPolicy::drop_and_report: return "drop-and-report";
    case SelfVerifyPolicy::flag: return "flag";
    case SelfVerifyPolicy::forward: return "forward";
  }
  return "?";
}

SelfVerifyPolicy parse_self_verify_policy(const std::string& text) {
  if (text == "drop-and-report") return SelfVerifyPolicy::drop_and_report;
  if (text == "flag") return SelfVerifyPolicy::flag;
  if (text == "forward") return SelfVerifyPolicy::forward;
  throw ConfigError("unknown self-verify policy '" + text + "'");
}

MiddleboxNode::MiddleboxNode(const SessionKeys& keys, EntityId entity, SelfVerifyPolicy policy)
    : keys_(keys), entity_(entity), policy_(policy) {
  if (!keys.config.rights.is_middlebox(entity)) throw ConfigError("entity is not a middlebox");
}

bool MiddleboxNode::self_verifying() const { return keys_.config.middleboxes.at(entity_.index - 1).self_verify; }

HopOutcome MiddleboxNode::process(ProtectedRecord record, const SegmentEdits& edits) const {
  HopOutcome out;
  const auto& keys = keys_.of(entity_);
  const auto binding = MacBinding::of(record.header);
  const Nonce nonce = record.header.nonce();
  const Segments received = split(record);
  const auto view = make_view(keys, record.layout, keys_.config.entity_count());

  out.view = decrypt_segments_for(keys, record.ciphertext, record.layout, nonce);
  Segments updated = received;
  for (const auto& [index, plaintext] : edits) {
    const ContextKeys* ck = index < record.layout.size() ? keys.find(record.layout[index].context) : nullptr;
    if (ck == nullptr || ck->access != Access::write) throw AccessViolation("edit outside the write set");
    if (plaintext.size() != record.layout[index].bit_length) throw ConfigError("edit changes the segment length");
    updated[index] = apply_segment_cipher(*ck->enc, nonce, record.layout, index, plaintext);
    out.view[index] = plaintext;
  }

  const HopDeltas deltas = hop_deltas(binding, view, received, updated);

  if (self_verifying() && record.header.content_type != content_type::kInjected) {
    PartialTag* own = record.find_self_verify(entity_);
    const bool ok = own != nullptr && tags_equal(deltas.selfverify_expectation(), *own);
    out.self_verified = ok;
    record.strip_self_verify(entity_);
    record.header.m_flag = !record.self_verify_tags.empty();
    if (!ok) {
      out.note = own == nullptr ? "self-verify tag missing" : "self-verify tag mismatch";
      if (policy_ == SelfVerifyPolicy::drop_and_report) {
        out.status = HopOutcome::Status::dropped;
        out.record = std::move(record);
        return out;
      }
    }
  }

  record.main_tag = deltas.apply({record.main_tag}).value;
  for (auto& sv : record.self_verify_tags) {
    if (sv.target <= entity_) continue;
    sv.tag = deltas.apply_selfverify(sv.tag, record.layout, keys_.config.rights.column(sv.target));
  }
  record.ciphertext = join_segments(updated);
  out.record = std::move(record);
  return out;
}

ReceiverNode::ReceiverNode(const SessionKeys& keys) : keys_(keys) {}

void ReceiverNode::register_injection_epoch(std::uint16_t epoch, SegmentationInfo layout) {
  if (epoch == 0) throw ConfigError("epoch 0 is reserved for the handshake");
  injection_[epoch] = std::move(layout);
}

ReceiveOutcome ReceiverNode::receive(std::span<const std::uint8_t> wire) {
  ProtectedRecord record;
  try {
    record = decode_record(wire, keys_.config.templates);
  } catch (const ProtocolError& e) {
    ReceiveOutcome out;
    out.reason = std::string("undecodable record: ") + e.what();
    return out;
  }
  return receive(record);
}

ReceiveOutcome ReceiverNode::receive(const ProtectedRecord& record) {
  ReceiveOutcome out;
  out.content_type = record.header.content_type;
  out.nonce = record.header.nonce();
  const std::uint16_t epoch = record.header.epoch;
  if (record.header.content_type == content_type::kInjected) {
    auto it = injection_.find(epoch);
    if (it == injection_.end()) {
      out.reason = "unknown injection epoch";
      return out;
    }
    if (it->second != record.layout) {
      out.reason = "injected record does not match its template";
      return out;
    }
  } else if (record.header.content_type == content_type::kRecord) {
    if (epoch == 0 || injection_.contains(epoch)) {
      out.reason = "epoch not valid for regular records";
      return out;
    }
  } else {
    out.reason = "unexpected content type";
    return out;
  }
  try {
    record.layout.validate(keys_.config.context_count());
  } catch (const ConfigError& e) {
    out.reason = e.what();
    return out;
  }
  auto& window = windows_[epoch];
  if (!window.fresh(record.header.sequence)) {
    out.reason = "replayed sequence number";
    return out;
  }
  const Segments segments = split(record);
  const auto& keys = keys_.of(keys_.receiver());
  const auto view = make_view(keys, record.layout, keys_.config.entity_count());
  if (!receiver_verify({record.main_tag}, MacBinding::of(record.header), segments, view)) {
    out.reason = "aggregated tag mismatch";
    return out;
  }
  window.mark(record.header.sequence);
  const auto plain = decrypt_segments_for(keys, record.ciphertext, record.layout, record.header.nonce());
  for (const auto& [index, bits] : plain) out.plaintext.append(bits);
  out.accepted = true;
  return out;
}

}  // namespace madtls
