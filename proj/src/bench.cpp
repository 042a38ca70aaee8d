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

#include "madtls/bench.hpp"

#include <chrono>
#include <random>

#include "madtls/session.hpp"

namespace madtls {

namespace {

struct Measurement {
  std::uint64_t hop_macs = 0;
  std::uint64_t endpoint_macs = 0;
  double mean_us = 0.0;
};

Measurement measure(std::size_t contexts, std::size_t bytes, Access access, std::size_t reps, std::uint64_t seed) {
  SessionConfig cfg;
  cfg.middleboxes = {{"mb", "192.0.2.10", false}};
  cfg.rights = AccessRights(3, 0);
  std::vector<Segment> segments;
  for (std::size_t c = 0; c < contexts; ++c) {
    cfg.rights.add_context({access});
    segments.push_back({static_cast<std::uint32_t>(bytes * 8), ContextId{static_cast<std::uint8_t>(c)}});
  }
  const SegmentationInfo layout(segments);
  cfg.templates.append(layout);
  std::mt19937_64 rng(seed);
  Bytes psk(32);
  for (auto& b : psk) b = static_cast<std::uint8_t>(rng());
  const auto keys = SessionKeys::derive(cfg, psk, {{EntityId{1}, psk}}, Bytes(64, 0x42));

  Sender sender(keys);
  const MiddleboxNode mb(keys, EntityId{1});
  ReceiverNode receiver(keys);
  BitString plaintext(layout.total_bits());
  SegmentEdits edits;
  if (access == Access::write)
    for (std::size_t i = 0; i < contexts; ++i) edits[i] = BitString(bytes * 8);

  Measurement m;
  double total_us = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto c0 = primitive_counts();
    auto record = sender.protect(plaintext, 0);
    const auto c1 = primitive_counts();
    const auto start = std::chrono::steady_clock::now();
    auto out = mb.process(record, edits);
    const auto stop = std::chrono::steady_clock::now();
    const auto c2 = primitive_counts();
    receiver.receive(out.record);
    const auto c3 = primitive_counts();
    total_us += std::chrono::duration<double, std::micro>(stop - start).count();
    m.hop_macs = (c2 - c1).mac;
    m.endpoint_macs = (c1 - c0).mac + (c3 - c2).mac;
  }
  m.mean_us = reps == 0 ? 0.0 : total_us / static_cast<double>(reps);
  return m;
}

}  // namespace

BenchResult run_bench(const std::vector<std::size_t>& context_bytes, const std::vector<std::size_t>& contexts,
                      std::size_t reps, std::uint64_t seed) {
  BenchResult result;
  std::map<std::pair<std::string, std::size_t>, std::uint64_t> by_size;
  for (std::size_t bytes : context_bytes) {
    for (std::size_t n : contexts) {
      std::uint64_t read_calls = 0;
      for (Access access : {Access::read, Access::write}) {
        const auto m = measure(n, bytes, access, reps, seed);
        const std::string kind = to_string(access);
        result.rows.push_back({n, bytes, kind, m.hop_macs, m.endpoint_macs, m.mean_us});
        const std::uint64_t per_context = access == Access::read ? 2 : 4;
        if (m.hop_macs != per_context * n)
          result.failures.push_back(kind + " hop with " + std::to_string(n) + " contexts made " +
                                    std::to_string(m.hop_macs) + " MAC calls, expected " +
                                    std::to_string(per_context * n));
        if (access == Access::read) {
          read_calls = m.hop_macs;
        } else if (m.hop_macs != 2 * read_calls) {
          result.failures.push_back("write/read MAC ratio is not 2 at " + std::to_string(n) + " contexts");
        }
        auto [it, inserted] = by_size.emplace(std::make_pair(kind, n), m.hop_macs);
        if (!inserted && it->second != m.hop_macs)
          result.failures.push_back(kind + " MAC calls depend on context size at " + std::to_string(n) + " contexts");
      }
    }
  }
  return result;
}

}  // namespace madtls
