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

#include "madtls/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "madtls/error.hpp"
#include "madtls/handshake.hpp"
#include "madtls/injection.hpp"
#include "madtls/session.hpp"
#include "madtls/tag_oracle.hpp"
#include "madtls/transport.hpp"

namespace madtls::sim {

namespace {

using Kind = TrafficItem::Kind;

Secret scenario_secret(std::string_view purpose, std::uint64_t seed, std::size_t index) {
  Bytes input = label(purpose);
  for (int i = 7; i >= 0; --i) input.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  input.push_back(static_cast<std::uint8_t>(index));
  const auto digest = sha256(input);
  return Secret(digest.begin(), digest.end());
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::send: return "send";
    case Kind::inject: return "inject";
    case Kind::replay: return "replay";
    case Kind::forge: return "forge";
  }
  return "?";
}

struct AppliedFlip {
  std::size_t position;
  FlipTarget target;
  std::vector<std::size_t> bits;
  bool reverted = false;
};

class Run {
 public:
  explicit Run(const Scenario& sc) : sc_(sc) {}

  RunReport execute();

 private:
  EntityId entity_of(const std::string& name) const {
    return EntityId{static_cast<std::uint8_t>(*sc_.middlebox_index(name) + 1)};
  }
  std::string name_of(EntityId e) const {
    if (e.index == 0) return "sender";
    if (e == keys_.receiver()) return "receiver";
    return sc_.middleboxes.at(e.index - 1).info.name;
  }

  std::vector<EntityId> route_for(const TrafficItem& item) const;
  void run_item(std::size_t index, const TrafficItem& item, ItemReport& report);
  /// Carries `datagram` from link `start` to the receiver along `route`.
  void travel(std::size_t index, const TrafficItem& item, ItemReport& report, Bytes datagram, std::size_t start,
              const std::vector<EntityId>& route, TagOracle* oracle);
  bool apply_link_attacks(const TrafficItem& item, std::size_t link, Bytes& datagram, std::vector<AppliedFlip>& flips);
  void flip(Bytes& datagram, FlipTarget target, const std::vector<std::size_t>& bits);
  HopOutcome middlebox_hop(const TrafficItem& item, EntityId mb, ProtectedRecord record, SegmentEdits edits);
  void rewrite_segment(ProtectedRecord& record, EntityId actor, std::size_t segment, const BitString& value,
                       bool rotate_tag);
  ProtectedRecord forge(std::size_t index, const TrafficItem& item);

  const Scenario& sc_;
  SessionKeys keys_;
  std::unique_ptr<Transport> transport_;
  std::unique_ptr<Sender> sender_;
  std::unique_ptr<ReceiverNode> receiver_;
  std::vector<MiddleboxNode> nodes_;
  injection::EpochAllocator epochs_;
  std::map<std::uint8_t, std::unique_ptr<injection::Injector>> injectors_;
  std::map<std::uint8_t, EntityId> injector_of_;
  std::vector<std::map<std::size_t, Bytes>> captured_;
  std::map<std::size_t, BitString> colluder_originals_;  // attack index → original ciphertext
  std::uint64_t view_bits_ = 0;
  std::uint64_t seen_bits_ = 0;
};

std::vector<EntityId> Run::route_for(const TrafficItem& item) const {
  std::vector<EntityId> route;
  for (std::size_t m = 0; m < sc_.middleboxes.size(); ++m) route.push_back(EntityId{static_cast<std::uint8_t>(m + 1)});
  for (const auto& a : item.attacks) {
    if (a.action == AttackAction::reorder_hops) {
      auto x = std::find(route.begin(), route.end(), entity_of(a.hops[0]));
      auto y = std::find(route.begin(), route.end(), entity_of(a.hops[1]));
      if (x != route.end() && y != route.end()) std::iter_swap(x, y);
    } else if (a.action == AttackAction::skip_hop) {
      route.erase(std::remove(route.begin(), route.end(), entity_of(a.hops[0])), route.end());
    }
  }
  return route;
}

void Run::flip(Bytes& datagram, FlipTarget target, const std::vector<std::size_t>& bits) {
  if (target == FlipTarget::wire) {
    for (auto b : bits) {
      if (b / 8 >= datagram.size()) throw ScenarioError({"wire bit " + std::to_string(b) + " outside the datagram"});
      datagram[b / 8] ^= static_cast<std::uint8_t>(0x80 >> (b % 8));
    }
    return;
  }
  ProtectedRecord r;
  try {
    r = decode_record(datagram, keys_.config.templates);
  } catch (const ProtocolError& e) {
    throw ScenarioError({std::string("cannot decode the record to flip: ") + e.what()});
  }
  for (auto b : bits) {
    if (target == FlipTarget::ciphertext) {
      if (b >= r.ciphertext.size()) throw ScenarioError({"ciphertext bit " + std::to_string(b) + " out of range"});
      r.ciphertext.flip(b);
    } else {
      if (b >= kTagSize * 8) throw ScenarioError({"tag bit " + std::to_string(b) + " out of range"});
      r.main_tag.bytes[b / 8] ^= static_cast<std::uint8_t>(0x80 >> (b % 8));
    }
  }
  datagram = encode_record(r);
}

bool Run::apply_link_attacks(const TrafficItem& item, std::size_t link, Bytes& datagram,
                             std::vector<AppliedFlip>& flips) {
  for (const auto& a : item.attacks) {
    if (a.position != link) continue;
    switch (a.action) {
      case AttackAction::flip_bits:
        flip(datagram, a.target, a.bits);
        flips.push_back({link, a.target, a.bits});
        break;
      case AttackAction::revert:
        for (auto& f : flips) {
          if (f.reverted || f.position >= link) continue;
          flip(datagram, f.target, f.bits);
          f.reverted = true;
        }
        break;
      case AttackAction::drop:
        return false;
      default:
        break;
    }
  }
  return true;
}

void Run::rewrite_segment(ProtectedRecord& record, EntityId actor, std::size_t segment, const BitString& value,
                          bool rotate_tag) {
  if (segment >= record.layout.size()) throw ScenarioError({"attack segment outside the layout"});
  const std::size_t bits = record.layout[segment].bit_length;
  BitString v = value.size() > bits ? value.slice(0, bits) : value;
  if (v.size() < bits) {
    BitString padded(bits);
    for (std::size_t i = 0; i < v.size(); ++i) padded.set_bit(i, v.bit(i));
    v = padded;
  }
  Segments segs = split_segments(record.ciphertext, record.layout);
  const BitString old = segs[segment];
  const ContextKeys* ck = keys_.of(actor).find(record.layout[segment].context);
  const Nonce nonce = record.header.nonce();
  segs[segment] = ck != nullptr && ck->enc ? apply_segment_cipher(*ck->enc, nonce, record.layout, segment, v) : old ^ v;
  if (rotate_tag && ck != nullptr) {
    const auto domain = MacBinding::of(record.header).domain(segment);
    for (const auto* key : {ck->read ? &*ck->read : nullptr, ck->write ? &*ck->write : nullptr}) {
      if (key == nullptr) continue;
      record.main_tag ^= mac(*key, domain, old) ^ mac(*key, domain, segs[segment]);
    }
  }
  record.ciphertext = join_segments(segs);
}

HopOutcome Run::middlebox_hop(const TrafficItem& item, EntityId mb, ProtectedRecord record, SegmentEdits edits) {
  const std::string name = name_of(mb);
  // The reverting colluder restores the original data and re-expresses the
  // predecessor term over it, using the predecessor's read key it holds.
  for (std::size_t i = 0; i < item.attacks.size(); ++i) {
    const auto& a = item.attacks[i];
    if (a.action != AttackAction::collude || a.partner != name) continue;
    auto original = colluder_originals_.find(i);
    if (original == colluder_originals_.end()) continue;
    Segments segs = split_segments(record.ciphertext, record.layout);
    const ContextKeys* ck = keys_.of(mb).find(record.layout[a.segment].context);
    if (ck != nullptr && ck->phi_read) {
      const auto domain = MacBinding::of(record.header).domain(a.segment);
      record.main_tag ^= mac(*ck->phi_read, domain, segs[a.segment]) ^ mac(*ck->phi_read, domain, original->second);
    }
    segs[a.segment] = original->second;
    record.ciphertext = join_segments(segs);
  }

  const auto& node = nodes_.at(mb.index - 1);
  HopOutcome out = node.process(std::move(record), edits);
  if (out.status != HopOutcome::Status::forwarded) return out;

  for (std::size_t i = 0; i < item.attacks.size(); ++i) {
    const auto& a = item.attacks[i];
    if (a.action == AttackAction::rogue_write && a.middlebox == name) {
      rewrite_segment(out.record, mb, a.segment, a.value, true);
    } else if (a.action == AttackAction::collude && a.middlebox == name) {
      colluder_originals_[i] = split_segments(out.record.ciphertext, out.record.layout).at(a.segment);
      rewrite_segment(out.record, mb, a.segment, a.value, true);
    }
  }
  return out;
}

void Run::travel(std::size_t index, const TrafficItem& item, ItemReport& report, Bytes datagram, std::size_t start,
                 const std::vector<EntityId>& route, TagOracle* oracle) {
  std::vector<AppliedFlip> flips;
  for (std::size_t link = start; link <= route.size(); ++link) {
    const EntityId from = link == 0 ? EntityId{0} : route[link - 1];
    const EntityId to = link == route.size() ? keys_.receiver() : route[link];
    if (!apply_link_attacks(item, link, datagram, flips)) {
      report.actual = "dropped";
      return;
    }
    captured_[index][link] = datagram;
    auto delivered = transport_->deliver(from.index, to.index, datagram);
    if (!delivered) {
      report.actual = "lost";
      return;
    }
    datagram = std::move(*delivered);

    HopTrace trace;
    trace.entity = name_of(to);
    trace.link = link;
    trace.in = datagram;

    if (to == keys_.receiver()) {
      const auto result = receiver_->receive(datagram);
      trace.verdict = result.accepted ? "accept" : "reject: " + result.reason;
      report.hops.push_back(std::move(trace));
      report.actual = result.accepted ? "accept" : "reject-at-receiver";
      if (!result.accepted) report.detail = result.reason;
      return;
    }

    ProtectedRecord record;
    try {
      record = decode_record(datagram, keys_.config.templates);
    } catch (const IgnoredRecord&) {
      trace.verdict = "forwarded opaque";
      trace.out = datagram;
      report.hops.push_back(std::move(trace));
      continue;
    } catch (const ProtocolError& e) {
      trace.verdict = std::string("drop: ") + e.what();
      report.hops.push_back(std::move(trace));
      report.actual = "reject-at-middlebox:" + name_of(to);
      report.detail = e.what();
      return;
    }

    SegmentEdits edits;
    if (item.kind == Kind::send)
      for (const auto& e : item.edits)
        if (e.middlebox == name_of(to)) edits[e.segment] = e.value;

    const Segments before = split_segments(record.ciphertext, record.layout);
    const auto counts_before = primitive_counts();
    HopOutcome out;
    try {
      out = middlebox_hop(item, to, std::move(record), edits);
    } catch (const ProtocolError& e) {
      trace.verdict = std::string("drop: ") + e.what();
      report.hops.push_back(std::move(trace));
      report.actual = "reject-at-middlebox:" + name_of(to);
      report.detail = e.what();
      return;
    }
    trace.cost = primitive_counts() - counts_before;
    trace.view = out.view;
    trace.self_verified = out.self_verified;
    trace.tag = out.record.main_tag;

    if (item.kind == Kind::send && sc_.blinded && sc_.blinded->middlebox == name_of(to)) {
      for (const auto& [i, bits] : out.view) view_bits_ += bits.size();
      seen_bits_ += out.record.layout.total_bits();
    }
    if (auto it = item.expect_view.find(name_of(to)); it != item.expect_view.end()) {
      std::vector<std::size_t> got;
      for (const auto& [i, bits] : out.view) got.push_back(i);
      if (got != it->second) report.detail += "view of " + name_of(to) + " differs from expectation; ";
    }

    if (out.status == HopOutcome::Status::dropped) {
      trace.verdict = "drop: " + out.note;
      report.hops.push_back(std::move(trace));
      report.actual = "reject-at-middlebox:" + name_of(to);
      report.detail = out.note;
      return;
    }
    trace.verdict = out.note.empty() ? "forwarded" : "forwarded (" + out.note + ")";
    if (oracle != nullptr) {
      oracle->hop(to, before, split_segments(out.record.ciphertext, out.record.layout));
      if (oracle->value().value != out.record.main_tag) ++report.oracle_mismatches;
    }
    datagram = encode_record(out.record);
    trace.out = datagram;
    report.hops.push_back(std::move(trace));
  }
}

ProtectedRecord Run::forge(std::size_t index, const TrafficItem& item) {
  std::mt19937_64 rng(sc_.seed ^ (0xF0F0F0F0ULL + index));
  ProtectedRecord r;
  r.header.content_type = item.content_type;
  r.header.sequence = item.sequence;
  if (item.content_type == content_type::kInjected) {
    r.header.epoch = 0xFFFF;
    for (std::uint16_t e = 0xFFFF; e > 0; --e)
      if (epochs_.is_injection(e)) {
        r.header.epoch = e;
        break;
      }
  } else {
    r.header.epoch = sender_->epoch();
  }
  if (item.layout) {
    r.layout = *item.layout;
    r.header.l_flag = true;
  } else {
    r.layout = *keys_.config.templates.find(*item.template_id);
    r.header.template_id = *item.template_id;
  }
  if (item.content_type == content_type::kInjected) r.header.l_flag = true;
  r.ciphertext = BitString(r.layout.total_bits());
  for (std::size_t b = 0; b < r.ciphertext.size(); ++b) r.ciphertext.set_bit(b, (rng() & 1U) != 0);
  for (auto& byte : r.main_tag.bytes) byte = static_cast<std::uint8_t>(rng());
  return r;
}

void Run::run_item(std::size_t index, const TrafficItem& item, ItemReport& report) {
  report.index = index;
  report.kind = kind_name(item.kind);
  report.expected = item.expect;
  const auto route = route_for(item);

  switch (item.kind) {
    case Kind::send: {
      ProtectedRecord record = item.template_id ? sender_->protect(item.plaintext, *item.template_id)
                                                : sender_->protect(item.plaintext, *item.layout);
      const Bytes datagram = encode_record(record);
      report.wire_bytes = datagram.size();
      report.plain_dtls_bytes = plain_dtls_record_size(record.ciphertext.byte_size());
      report.template_referenced = !record.header.l_flag;
      report.self_verify_tags = record.self_verify_tags.size();
      std::unique_ptr<TagOracle> oracle;
      if (sc_.oracle && item.attacks.empty()) {
        oracle = std::make_unique<TagOracle>(keys_.matrix, keys_.config.rights, record.layout,
                                             MacBinding::of(record.header));
        oracle->sender(split_segments(record.ciphertext, record.layout));
        if (oracle->value().value != record.main_tag) ++report.oracle_mismatches;
      }
      travel(index, item, report, datagram, 0, route, oracle.get());
      break;
    }
    case Kind::inject: {
      auto inj = injectors_.find(item.injection_template);
      const EntityId self = injector_of_.at(item.injection_template);
      ProtectedRecord record;
      try {
        record = inj->second->inject(item.injection_template, item.sequence, item.values);
      } catch (const Error& e) {
        report.actual = "reject-at-injector";
        report.detail = e.what();
        return;
      }
      const Bytes datagram = encode_record(record);
      report.wire_bytes = datagram.size();
      auto pos = std::find(route.begin(), route.end(), self);
      if (pos == route.end()) {
        report.actual = "dropped";
        report.detail = "injector skipped";
        return;
      }
      travel(index, item, report, datagram, static_cast<std::size_t>(pos - route.begin()) + 1, route, nullptr);
      break;
    }
    case Kind::replay: {
      auto it = captured_.at(item.replay_of).find(item.position);
      if (it == captured_[item.replay_of].end()) {
        report.actual = "nothing-captured";
        report.detail = "the replayed item never crossed that link";
        return;
      }
      travel(index, item, report, it->second, item.position, route, nullptr);
      break;
    }
    case Kind::forge: {
      const Bytes datagram = encode_record(forge(index, item));
      report.wire_bytes = datagram.size();
      travel(index, item, report, datagram, item.position, route, nullptr);
      break;
    }
  }
}

RunReport Run::execute() {
  RunReport report;
  report.scenario = sc_.name;
  report.seed = sc_.seed;
  report.transport = sc_.transport == TransportKind::datagram ? "datagram" : "memory";
  const std::size_t entities = sc_.middleboxes.size() + 2;
  transport_ = make_transport(sc_.transport, entities, sc_.drop_rate, sc_.seed);
  transport_->set_lossy(false);

  handshake::HandshakeParticipants p;
  p.config = sc_.config;
  p.psk_sr = scenario_secret("psk sender-receiver", sc_.seed, 0);
  for (std::size_t m = 1; m + 1 < entities; ++m)
    p.psks_sm[EntityId{static_cast<std::uint8_t>(m)}] = scenario_secret("psk sender-middlebox", sc_.seed, m);
  p.seed = sc_.seed;
  auto carry = [&](int flight, int link, Bytes& datagram) {
    const bool forward = flight % 2 == 0;
    const std::size_t from = forward ? static_cast<std::size_t>(link) : entities - 1 - static_cast<std::size_t>(link);
    const std::size_t to = forward ? from + 1 : from - 1;
    datagram = transport_->deliver(from, to, datagram).value_or(Bytes{});
  };
  const auto hs = handshake::run_handshake(p, carry);
  report.handshake_flights = hs.flights;
  report.handshake_established = hs.established;
  report.handshake_failure = hs.failure;
  if (!hs.established) return report;

  keys_ = SessionKeys::from_handshake(hs);
  sender_ = std::make_unique<Sender>(keys_, epochs_.current_regular());
  receiver_ = std::make_unique<ReceiverNode>(keys_);
  for (std::size_t m = 0; m < sc_.middleboxes.size(); ++m)
    nodes_.emplace_back(keys_, EntityId{static_cast<std::uint8_t>(m + 1)}, sc_.middleboxes[m].policy);

  injection::Issuer issuer(keys_, epochs_);
  for (const auto& spec : sc_.injection_templates) {
    const EntityId mb = entity_of(spec.middlebox);
    auto tmpl = issuer.issue(spec.id, spec.layout, spec.placeholder, spec.fixed, mb, spec.first_sequence, spec.count);
    std::vector<injection::PreIssued> entries;
    for (const auto& [seq, e] : tmpl.issued) entries.push_back(e);
    const Bytes stream = issuer.tag_stream(tmpl, entries, true);
    auto delivered = transport_->deliver(0, mb.index, stream);
    const MacKey kd = derive_kd_key(p.psks_sm.at(mb), hs.client->handshake_nonce());
    auto injector = std::make_unique<injection::Injector>(keys_, mb, kd);
    injector->accept_tag_stream(*delivered);
    injectors_[spec.id] = std::move(injector);
    injector_of_[spec.id] = mb;
    receiver_->register_injection_epoch(tmpl.epoch, spec.layout);
  }
  transport_->set_lossy(true);

  captured_.resize(sc_.traffic.size());
  std::size_t oracle_total = 0;
  std::size_t template_records = 0;
  double max_overhead = 0;
  double min_overhead = 1e9;
  for (std::size_t i = 0; i < sc_.traffic.size(); ++i) {
    ItemReport item;
    try {
      run_item(i, sc_.traffic[i], item);
    } catch (const ScenarioError& e) {
      item.actual = "scenario-error";
      item.detail = e.violations().empty() ? e.what() : e.violations().front();
    }
    const std::string expected = item.expected.to_string();
    if (item.actual == "lost") {
      item.matched = item.expected.kind == Expectation::Kind::accept;
      item.detail = "lost in transit";
    } else {
      item.matched = item.actual == expected && item.oracle_mismatches == 0 &&
                     item.detail.find("view of") == std::string::npos;
    }
    oracle_total += item.oracle_mismatches;
    if (item.kind == "send" && item.template_referenced && item.self_verify_tags == 0) {
      const double overhead = static_cast<double>(item.wire_bytes) - static_cast<double>(item.plain_dtls_bytes);
      max_overhead = std::max(max_overhead, overhead);
      min_overhead = std::min(min_overhead, overhead);
      ++template_records;
    }
    report.items.push_back(std::move(item));
  }
  report.metrics["items"] = static_cast<double>(report.items.size());
  report.metrics["mismatches"] = static_cast<double>(report.mismatches());
  report.metrics["oracle_mismatches"] = static_cast<double>(oracle_total);
  if (template_records > 0) {
    report.metrics["template_record_overhead_min_bytes"] = min_overhead;
    report.metrics["template_record_overhead_max_bytes"] = max_overhead;
  }
  if (sc_.blinded) {
    const double fraction = seen_bits_ == 0 ? 0.0 : 1.0 - static_cast<double>(view_bits_) / static_cast<double>(seen_bits_);
    report.metrics["blinded_fraction"] = fraction;
    if (fraction < sc_.blinded->min_fraction) {
      std::ostringstream msg;
      msg << "blinded fraction " << fraction << " below " << sc_.blinded->min_fraction;
      report.violations.push_back(msg.str());
    }
  }
  return report;
}

std::string hex_of(const Bytes& b) { return to_hex(b); }

}  // namespace

std::size_t RunReport::mismatches() const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const ItemReport& i) { return !i.matched; }));
}

RunReport run_scenario(const Scenario& scenario) {
  scenario.validate();
  return Run(scenario).execute();
}

std::string to_text(const RunReport& r) {
  std::ostringstream out;
  out << "scenario " << r.scenario << " (seed " << r.seed << ", " << r.transport << ")\n";
  out << "  handshake: " << (r.handshake_established ? "established" : "FAILED " + r.handshake_failure) << " in "
      << r.handshake_flights << " flights\n";
  for (const auto& i : r.items) {
    out << "  #" << i.index << " " << i.kind << " expected=" << i.expected.to_string() << " actual=" << i.actual
        << (i.matched ? " ok" : " MISMATCH");
    if (i.wire_bytes != 0) out << " wire=" << i.wire_bytes;
    if (!i.detail.empty()) out << " (" << i.detail << ")";
    out << "\n";
    for (const auto& h : i.hops)
      out << "      link " << h.link << " -> " << h.entity << ": " << h.verdict << " mac=" << h.cost.mac << "\n";
  }
  for (const auto& [k, v] : r.metrics) out << "  " << k << " = " << v << "\n";
  for (const auto& v : r.violations) out << "  VIOLATION " << v << "\n";
  out << "  result: " << (r.passed() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

std::string to_json(const std::vector<RunReport>& reports, bool with_traces) {
  nlohmann::json runs = nlohmann::json::array();
  std::size_t failed = 0;
  for (const auto& r : reports) {
    nlohmann::json j;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["transport"] = r.transport;
    j["handshake"] = {{"established", r.handshake_established},
                      {"flights", r.handshake_flights},
                      {"failure", r.handshake_failure}};
    j["passed"] = r.passed();
    j["metrics"] = r.metrics;
    j["violations"] = r.violations;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& i : r.items) {
      nlohmann::json ji{{"index", i.index},       {"kind", i.kind},     {"expected", i.expected.to_string()},
                        {"actual", i.actual},     {"matched", i.matched}, {"detail", i.detail},
                        {"wire_bytes", i.wire_bytes}};
      if (with_traces) {
        nlohmann::json hops = nlohmann::json::array();
        for (const auto& h : i.hops) {
          nlohmann::json view = nlohmann::json::object();
          for (const auto& [idx, bits] : h.view) view[std::to_string(idx)] = bits.to_hex();
          nlohmann::json jh{{"entity", h.entity}, {"link", h.link},         {"in", hex_of(h.in)},
                            {"out", hex_of(h.out)}, {"view", view},         {"tag", h.tag.to_hex()},
                            {"verdict", h.verdict}, {"mac_calls", h.cost.mac}, {"keystream_calls", h.cost.keystream}};
          if (h.self_verified) jh["self_verified"] = *h.self_verified;
          hops.push_back(std::move(jh));
        }
        ji["hops"] = std::move(hops);
      }
      items.push_back(std::move(ji));
    }
    j["items"] = std::move(items);
    if (!r.passed()) ++failed;
    runs.push_back(std::move(j));
  }
  nlohmann::json root{{"runs", std::move(runs)}, {"total", reports.size()}, {"failed", failed}};
  return root.dump(2);
}

}  // namespace madtls::sim
