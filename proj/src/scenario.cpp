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

#include "madtls/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <random>
#include <sstream>

#include "madtls/error.hpp"
#include "madtls/injection.hpp"

namespace madtls::sim {

namespace {

std::string where(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.is_null()) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) { throw ScenarioError({what + where(node)}); }

std::string text(const YAML::Node& node, const std::string& what) {
  if (!node || !node.IsScalar()) fail(node, "expected scalar for " + what);
  return node.as<std::string>();
}

template <typename T>
T number(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, "expected number for " + what);
  }
}

/// Hex by default; a "bits:" prefix selects a bit string. Whitespace is ignored.
BitString bits_value(const YAML::Node& node, const std::string& what) {
  std::string raw = text(node, what);
  std::string clean;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch)) && ch != '_') clean += ch;
  try {
    if (clean.rfind("bits:", 0) == 0) return BitString::from_bits(clean.substr(5));
    return BitString::from_hex(clean);
  } catch (const std::exception& e) {
    fail(node, "bad value for " + what + ": " + e.what());
  }
}

/// Trims byte padding when the value was written in hex.
BitString fit(BitString value, std::size_t bits) {
  if (value.size() > bits && value.size() - bits < 8) return value.slice(0, bits);
  return value;
}

Access parse_access(const YAML::Node& node) {
  const auto s = text(node, "access");
  if (s == "none") return Access::none;
  if (s == "read") return Access::read;
  if (s == "write") return Access::write;
  fail(node, "unknown access '" + s + "'");
}

struct Parser {
  Scenario s;

  ContextId context(const YAML::Node& node) {
    const auto name = text(node, "context");
    for (std::size_t i = 0; i < s.context_names.size(); ++i)
      if (s.context_names[i] == name) return ContextId{static_cast<std::uint8_t>(i)};
    fail(node, "unknown context '" + name + "'");
  }

  SegmentationInfo layout(const YAML::Node& node, std::vector<bool>* placeholder = nullptr) {
    if (!node.IsSequence() || node.size() == 0) fail(node, "layout must be a non-empty list");
    std::vector<Segment> segs;
    for (const auto& seg : node) {
      if (!seg.IsSequence() || seg.size() < 2) fail(seg, "segment must be [bits, context]");
      segs.push_back({number<std::uint32_t>(seg[0], "segment bits"), context(seg[1])});
      if (placeholder != nullptr) {
        const std::string mark = seg.size() > 2 ? text(seg[2], "segment kind") : "fixed";
        if (mark != "fixed" && mark != "placeholder") fail(seg[2], "segment kind must be fixed or placeholder");
        placeholder->push_back(mark == "placeholder");
      }
    }
    return SegmentationInfo(std::move(segs));
  }

  Attack attack(const YAML::Node& node) {
    Attack a;
    const auto action = text(node["action"], "attack action");
    static const std::map<std::string, AttackAction> actions = {
        {"flip-bits", AttackAction::flip_bits},     {"revert", AttackAction::revert},
        {"reorder-hops", AttackAction::reorder_hops}, {"skip-hop", AttackAction::skip_hop},
        {"drop", AttackAction::drop},               {"rogue-write", AttackAction::rogue_write},
        {"collude", AttackAction::collude}};
    auto it = actions.find(action);
    if (it == actions.end()) fail(node, "unknown attack action '" + action + "'");
    a.action = it->second;
    if (node["position"]) a.position = number<std::size_t>(node["position"], "position");
    if (node["target"]) {
      const auto t = text(node["target"], "flip target");
      if (t == "ciphertext") a.target = FlipTarget::ciphertext;
      else if (t == "tag") a.target = FlipTarget::tag;
      else if (t == "wire") a.target = FlipTarget::wire;
      else fail(node["target"], "unknown flip target '" + t + "'");
    }
    if (node["bits"]) {
      for (const auto& b : node["bits"]) a.bits.push_back(number<std::size_t>(b, "bit index"));
    }
    if (node["hops"]) {
      for (const auto& h : node["hops"]) a.hops.push_back(text(h, "hop name"));
    }
    if (node["middlebox"]) a.middlebox = text(node["middlebox"], "middlebox");
    if (node["partner"]) a.partner = text(node["partner"], "partner");
    if (node["segment"]) a.segment = number<std::size_t>(node["segment"], "segment");
    if (node["value"]) a.value = bits_value(node["value"], "attack value");
    return a;
  }

  void common(const YAML::Node& node, TrafficItem& item) {
    if (node["expect"]) {
      try {
        item.expect = Expectation::parse(text(node["expect"], "expect"));
      } catch (const ConfigError& e) {
        fail(node["expect"], e.what());
      }
    }
    if (node["attacks"]) {
      for (const auto& a : node["attacks"]) item.attacks.push_back(attack(a));
    }
    if (node["position"]) item.position = number<std::size_t>(node["position"], "position");
  }

  TrafficItem traffic(const YAML::Node& node) {
    TrafficItem item;
    if (node["send"]) {
      item.kind = TrafficItem::Kind::send;
      item.plaintext = bits_value(node["send"], "plaintext");
      if (node["template"]) item.template_id = number<unsigned>(node["template"], "template");
      if (node["layout"]) item.layout = layout(node["layout"]);
      if (item.template_id.has_value() == item.layout.has_value()) fail(node, "send needs exactly one of template or layout");
      const SegmentationInfo* resolved =
          item.layout ? &*item.layout : s.config.templates.find(*item.template_id);
      if (resolved == nullptr) fail(node["template"], "unknown template");
      item.plaintext = fit(item.plaintext, resolved->total_bits());
      if (node["edits"]) {
        for (const auto& e : node["edits"]) {
          Edit edit;
          edit.middlebox = text(e["middlebox"], "edit middlebox");
          edit.segment = number<std::size_t>(e["segment"], "edit segment");
          edit.value = bits_value(e["value"], "edit value");
          if (edit.segment < resolved->size()) edit.value = fit(edit.value, (*resolved)[edit.segment].bit_length);
          item.edits.push_back(std::move(edit));
        }
      }
      if (node["expect_view"]) {
        for (const auto& kv : node["expect_view"]) {
          std::vector<std::size_t> segs;
          for (const auto& v : kv.second) segs.push_back(number<std::size_t>(v, "segment"));
          item.expect_view[text(kv.first, "middlebox")] = segs;
        }
      }
      if (node["flow"]) item.flow = text(node["flow"], "flow");
    } else if (node["inject"]) {
      item.kind = TrafficItem::Kind::inject;
      item.injection_template = number<unsigned>(node["inject"], "injection template");
      item.sequence = number<std::uint64_t>(node["sequence"], "sequence");
      const InjectionTemplateSpec* spec = nullptr;
      for (const auto& t : s.injection_templates)
        if (t.id == item.injection_template) spec = &t;
      if (node["values"]) {
        for (const auto& kv : node["values"]) {
          const auto index = number<std::size_t>(kv.first, "placeholder segment");
          BitString v = bits_value(kv.second, "placeholder value");
          if (spec != nullptr && index < spec->layout.size()) v = fit(v, spec->layout[index].bit_length);
          item.values[index] = v;
        }
      }
    } else if (node["replay"]) {
      item.kind = TrafficItem::Kind::replay;
      item.replay_of = number<std::size_t>(node["replay"], "replayed item");
      item.expect = {Expectation::Kind::reject_at_receiver, {}};
    } else if (node["forge"]) {
      item.kind = TrafficItem::Kind::forge;
      const auto type = text(node["forge"], "forged content type");
      if (type == "regular") item.content_type = content_type::kRecord;
      else if (type == "injected") item.content_type = content_type::kInjected;
      else fail(node["forge"], "forge must be regular or injected");
      if (node["template"]) item.template_id = number<unsigned>(node["template"], "template");
      if (node["layout"]) item.layout = layout(node["layout"]);
      if (node["sequence"]) item.sequence = number<std::uint64_t>(node["sequence"], "sequence");
      item.expect = {Expectation::Kind::reject_at_receiver, {}};
    } else {
      fail(node, "traffic item needs one of send, inject, replay, forge");
    }
    common(node, item);
    return item;
  }

  void scenario(const YAML::Node& root) {
    s.name = root["name"] ? text(root["name"], "name") : "unnamed";
    if (root["seed"]) s.seed = number<std::uint64_t>(root["seed"], "seed");
    if (root["transport"]) {
      const auto t = text(root["transport"], "transport");
      if (t == "memory") s.transport = TransportKind::memory;
      else if (t == "datagram") s.transport = TransportKind::datagram;
      else fail(root["transport"], "transport must be memory or datagram");
    }
    if (root["drop_rate"]) s.drop_rate = number<double>(root["drop_rate"], "drop_rate");
    if (root["oracle"]) s.oracle = root["oracle"].as<bool>();

    for (const auto& mb : root["middleboxes"]) {
      MiddleboxSpec spec;
      spec.info.name = text(mb["name"], "middlebox name");
      spec.info.address = mb["address"] ? text(mb["address"], "address") : spec.info.name;
      if (mb["self_verify"]) spec.info.self_verify = mb["self_verify"].as<bool>();
      if (mb["on_self_verify_failure"]) {
        try {
          spec.policy = parse_self_verify_policy(text(mb["on_self_verify_failure"], "policy"));
        } catch (const ConfigError& e) {
          fail(mb["on_self_verify_failure"], e.what());
        }
      }
      s.middleboxes.push_back(spec);
      s.config.middleboxes.push_back(spec.info);
    }
    s.config.rights = AccessRights(s.middleboxes.size() + 2, 0);
    for (const auto& ctx : root["contexts"]) {
      s.context_names.push_back(text(ctx["name"], "context name"));
      std::vector<Access> row(s.middleboxes.size(), Access::none);
      if (ctx["rights"]) {
        for (const auto& kv : ctx["rights"]) {
          const auto name = text(kv.first, "middlebox");
          const auto idx = s.middlebox_index(name);
          if (!idx) fail(kv.first, "unknown middlebox '" + name + "'");
          row[*idx] = parse_access(kv.second);
        }
      }
      if (s.context_names.size() > kMaxContexts) fail(ctx, "more than 64 contexts");
      s.config.rights.add_context(row);
    }
    if (root["templates"]) {
      for (const auto& t : root["templates"]) {
        const auto id = number<unsigned>(t["id"], "template id");
        if (id >= kMaxTemplates) fail(t["id"], "template id out of range");
        try {
          s.config.templates.add(static_cast<std::uint8_t>(id), layout(t["segments"]));
        } catch (const ConfigError& e) {
          fail(t, e.what());
        }
      }
    }
    if (root["injection_templates"]) {
      for (const auto& t : root["injection_templates"]) {
        InjectionTemplateSpec spec;
        spec.id = static_cast<std::uint8_t>(number<unsigned>(t["id"], "template id"));
        spec.middlebox = text(t["middlebox"], "injector");
        spec.layout = layout(t["segments"], &spec.placeholder);
        spec.fixed = fit(bits_value(t["fixed"], "fixed content"), spec.layout.total_bits());
        if (t["first_sequence"]) spec.first_sequence = number<std::uint64_t>(t["first_sequence"], "first_sequence");
        if (t["count"]) spec.count = number<std::size_t>(t["count"], "count");
        s.injection_templates.push_back(std::move(spec));
      }
    }
    if (root["traffic"]) {
      for (const auto& item : root["traffic"]) s.traffic.push_back(traffic(item));
    }
    if (root["analysis"] && root["analysis"]["blinded"]) {
      const auto b = root["analysis"]["blinded"];
      s.blinded = BlindedCheck{text(b["middlebox"], "blinded middlebox"), number<double>(b["min_fraction"], "min_fraction")};
    }
  }
};

Scenario parse_one(const YAML::Node& node) {
  Parser p;
  p.scenario(node);
  p.s.validate();
  return std::move(p.s);
}

}  // namespace

const char* to_string(AttackAction action) {
  switch (action) {
    case AttackAction::flip_bits: return "flip-bits";
    case AttackAction::revert: return "revert";
    case AttackAction::reorder_hops: return "reorder-hops";
    case AttackAction::skip_hop: return "skip-hop";
    case AttackAction::drop: return "drop";
    case AttackAction::rogue_write: return "rogue-write";
    case AttackAction::collude: return "collude";
  }
  return "?";
}

Expectation Expectation::parse(const std::string& t) {
  if (t == "accept") return {Kind::accept, {}};
  if (t == "reject-at-receiver") return {Kind::reject_at_receiver, {}};
  if (t == "dropped") return {Kind::dropped, {}};
  if (t == "reject-at-injector") return {Kind::reject_at_injector, {}};
  const std::string prefix = "reject-at-middlebox:";
  if (t.rfind(prefix, 0) == 0 && t.size() > prefix.size()) return {Kind::reject_at_middlebox, t.substr(prefix.size())};
  throw ConfigError("unknown expectation '" + t + "'");
}

std::string Expectation::to_string() const {
  switch (kind) {
    case Kind::accept: return "accept";
    case Kind::reject_at_receiver: return "reject-at-receiver";
    case Kind::reject_at_middlebox: return "reject-at-middlebox:" + middlebox;
    case Kind::dropped: return "dropped";
    case Kind::reject_at_injector: return "reject-at-injector";
  }
  return "?";
}

std::optional<std::size_t> Scenario::middlebox_index(const std::string& name) const {
  for (std::size_t i = 0; i < middleboxes.size(); ++i)
    if (middleboxes[i].info.name == name) return i;
  return std::nullopt;
}

void Scenario::validate() const {
  std::vector<std::string> v;
  try {
    config.validate();
  } catch (const ConfigError& e) {
    v.emplace_back(e.what());
  }
  if (drop_rate < 0.0 || drop_rate > 0.3) v.emplace_back("drop_rate must lie in [0, 0.3]");
  const std::size_t links = middleboxes.size() + 1;
  const auto& rights = config.rights;
  auto entity = [&](const std::string& name) -> std::optional<EntityId> {
    auto i = middlebox_index(name);
    if (!i) return std::nullopt;
    return EntityId{static_cast<std::uint8_t>(*i + 1)};
  };

  for (const auto& t : injection_templates) {
    const std::string label = "injection template " + std::to_string(t.id);
    auto mb = entity(t.middlebox);
    if (!mb) {
      v.push_back(label + ": unknown middlebox '" + t.middlebox + "'");
      continue;
    }
    try {
      injection::check_template(config, t.layout, t.placeholder, *mb);
    } catch (const ConfigError& e) {
      v.push_back(label + ": " + e.what());
    }
    if (t.fixed.size() != t.layout.total_bits()) v.push_back(label + ": fixed content length mismatch");
  }

  for (std::size_t n = 0; n < traffic.size(); ++n) {
    const auto& item = traffic[n];
    const std::string label = "traffic[" + std::to_string(n) + "]";
    if (item.expect.kind == Expectation::Kind::reject_at_middlebox && !entity(item.expect.middlebox))
      v.push_back(label + ": expectation names unknown middlebox '" + item.expect.middlebox + "'");
    const SegmentationInfo* layout = nullptr;
    if (item.kind == TrafficItem::Kind::send || item.kind == TrafficItem::Kind::forge) {
      if (item.layout) {
        layout = &*item.layout;
      } else if (item.template_id) {
        layout = config.templates.find(*item.template_id);
        if (layout == nullptr) v.push_back(label + ": unknown template " + std::to_string(*item.template_id));
      } else if (item.kind == TrafficItem::Kind::forge) {
        v.push_back(label + ": forged record needs a template or layout");
      }
      if (layout != nullptr) {
        try {
          layout->validate(config.context_count());
        } catch (const ConfigError& e) {
          v.push_back(label + ": " + e.what());
          layout = nullptr;
        }
      }
    }
    if (item.kind == TrafficItem::Kind::send && layout != nullptr) {
      if (item.plaintext.size() != layout->total_bits())
        v.push_back(label + ": plaintext has " + std::to_string(item.plaintext.size()) + " bits, layout needs " +
                    std::to_string(layout->total_bits()));
      for (const auto& e : item.edits) {
        auto mb = entity(e.middlebox);
        if (!mb) {
          v.push_back(label + ": edit by unknown middlebox '" + e.middlebox + "'");
        } else if (e.segment >= layout->size()) {
          v.push_back(label + ": edit of segment " + std::to_string(e.segment) + " outside the layout");
        } else if (rights.get((*layout)[e.segment].context, *mb) != Access::write) {
          v.push_back(label + ": " + e.middlebox + " lacks write access to segment " + std::to_string(e.segment));
        } else if (e.value.size() != (*layout)[e.segment].bit_length) {
          v.push_back(label + ": edit value length does not match segment " + std::to_string(e.segment));
        }
      }
      for (const auto& [name, segs] : item.expect_view)
        if (!entity(name)) v.push_back(label + ": expect_view names unknown middlebox '" + name + "'");
    }
    if (item.kind == TrafficItem::Kind::inject) {
      const InjectionTemplateSpec* spec = nullptr;
      for (const auto& t : injection_templates)
        if (t.id == item.injection_template) spec = &t;
      if (spec == nullptr) {
        v.push_back(label + ": unknown injection template " + std::to_string(item.injection_template));
      } else {
        for (const auto& [index, value] : item.values) {
          if (index >= spec->layout.size()) v.push_back(label + ": value for a segment outside the template");
        }
      }
    }
    if ((item.kind == TrafficItem::Kind::replay) && item.replay_of >= n)
      v.push_back(label + ": replay must reference an earlier item");
    if ((item.kind == TrafficItem::Kind::replay || item.kind == TrafficItem::Kind::forge) && item.position >= links)
      v.push_back(label + ": position outside the path");

    std::vector<std::size_t> flips;
    for (const auto& a : item.attacks) {
      const std::string al = label + " " + to_string(a.action);
      if (a.position >= links) v.push_back(al + ": position " + std::to_string(a.position) + " outside the path");
      switch (a.action) {
        case AttackAction::flip_bits:
          if (a.bits.empty()) v.push_back(al + ": no bits to flip");
          flips.push_back(a.position);
          break;
        case AttackAction::revert:
          if (std::none_of(flips.begin(), flips.end(), [&](std::size_t p) { return p < a.position; }))
            v.push_back(al + ": revert without an earlier flip");
          break;
        case AttackAction::reorder_hops:
          if (a.hops.size() != 2) v.push_back(al + ": needs exactly two hops");
          for (const auto& h : a.hops)
            if (!entity(h)) v.push_back(al + ": unknown middlebox '" + h + "'");
          break;
        case AttackAction::skip_hop:
          if (a.hops.size() != 1) v.push_back(al + ": needs exactly one hop");
          for (const auto& h : a.hops)
            if (!entity(h)) v.push_back(al + ": unknown middlebox '" + h + "'");
          break;
        case AttackAction::drop:
          break;
        case AttackAction::rogue_write:
          if (!entity(a.middlebox)) v.push_back(al + ": unknown middlebox '" + a.middlebox + "'");
          break;
        case AttackAction::collude: {
          auto first = entity(a.middlebox);
          auto second = entity(a.partner);
          if (!first || !second) v.push_back(al + ": unknown colluder");
          else if (!(*first < *second)) v.push_back(al + ": the modifying colluder must precede its partner");
          break;
        }
      }
    }
  }
  if (blinded && !entity(blinded->middlebox)) v.push_back("analysis: unknown middlebox '" + blinded->middlebox + "'");
  if (!v.empty()) throw ScenarioError(v);
}

std::vector<Scenario> random_sessions(const RandomSessionParams& params) {
  std::vector<Scenario> out;
  out.reserve(params.count);
  for (std::size_t n = 0; n < params.count; ++n) {
    std::mt19937_64 rng(params.seed * 0x9E3779B97F4A7C15ULL + n);
    auto pick = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    Scenario s;
    s.name = "random_session_" + std::to_string(n);
    s.seed = rng();
    s.oracle = true;
    const std::size_t entities = pick(2, std::max<std::size_t>(2, params.max_entities));
    const std::size_t contexts = pick(1, params.max_contexts);
    for (std::size_t m = 0; m + 2 < entities; ++m) {
      MiddleboxSpec mb;
      mb.info.name = "mb" + std::to_string(m + 1);
      mb.info.address = "10.0.0." + std::to_string(m + 2);
      mb.info.self_verify = pick(0, 2) == 0;
      s.middleboxes.push_back(mb);
      s.config.middleboxes.push_back(mb.info);
    }
    s.config.rights = AccessRights(entities, 0);
    for (std::size_t c = 0; c < contexts; ++c) {
      s.context_names.push_back("ctx" + std::to_string(c));
      std::vector<Access> row;
      for (std::size_t m = 0; m + 2 < entities; ++m) row.push_back(static_cast<Access>(pick(0, 2)));
      s.config.rights.add_context(row);
    }
    for (std::size_t k = 0; k < params.messages; ++k) {
      std::vector<Segment> segs;
      const std::size_t count = pick(1, params.max_segments);
      for (std::size_t i = 0; i < count; ++i)
        segs.push_back({static_cast<std::uint32_t>(pick(1, 48)), ContextId{static_cast<std::uint8_t>(pick(0, contexts - 1))}});
      SegmentationInfo layout(segs);
      TrafficItem item;
      item.kind = TrafficItem::Kind::send;
      if (pick(0, 1) == 0 && s.config.templates.next_free_id()) {
        item.template_id = s.config.templates.append(layout);
      } else {
        item.layout = layout;
      }
      item.plaintext = BitString(layout.total_bits());
      for (std::size_t b = 0; b < layout.total_bits(); ++b) item.plaintext.set_bit(b, pick(0, 1) == 1);
      for (std::size_t i = 0; i < layout.size(); ++i) {
        for (std::size_t m = 0; m < s.middleboxes.size(); ++m) {
          const EntityId e{static_cast<std::uint8_t>(m + 1)};
          if (s.config.rights.get(layout[i].context, e) != Access::write || pick(0, 1) == 0) continue;
          BitString v(layout[i].bit_length);
          for (std::size_t b = 0; b < v.size(); ++b) v.set_bit(b, pick(0, 1) == 1);
          item.edits.push_back({s.middleboxes[m].info.name, i, v});
        }
      }
      s.traffic.push_back(std::move(item));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Scenario> parse_scenarios(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError({std::string("malformed YAML: ") + e.what()});
  }
  if (!root.IsMap()) throw ScenarioError({"scenario file must be a mapping"});
  std::vector<Scenario> out;
  try {
    if (root["generate"]) {
      const auto g = root["generate"]["random_sessions"];
      if (!g) fail(root["generate"], "only random_sessions can be generated");
      RandomSessionParams p;
      if (g["count"]) p.count = number<std::size_t>(g["count"], "count");
      if (g["seed"]) p.seed = number<std::uint64_t>(g["seed"], "seed");
      if (g["max_entities"]) p.max_entities = number<std::size_t>(g["max_entities"], "max_entities");
      if (g["max_contexts"]) p.max_contexts = number<std::size_t>(g["max_contexts"], "max_contexts");
      if (g["max_segments"]) p.max_segments = number<std::size_t>(g["max_segments"], "max_segments");
      if (g["messages"]) p.messages = number<std::size_t>(g["messages"], "messages");
      if (p.max_entities < 2 || p.max_entities > kMaxEntities || p.max_contexts < 1 ||
          p.max_contexts > handshake::kMaxClientContexts || p.max_segments < 1)
        fail(g, "generator bounds out of range");
      out = random_sessions(p);
    } else if (root["scenarios"]) {
      for (const auto& s : root["scenarios"]) out.push_back(parse_one(s));
    } else {
      out.push_back(parse_one(root));
    }
  } catch (const YAML::Exception& e) {
    throw ScenarioError({std::string("malformed scenario: ") + e.what()});
  }
  return out;
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({"cannot read scenario file " + path.string()});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenarios(buf.str());
}

}  // namespace madtls::sim
