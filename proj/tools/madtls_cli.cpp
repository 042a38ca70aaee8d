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

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "madtls/bench.hpp"
#include "madtls/error.hpp"
#include "madtls/pipeline.hpp"
#include "madtls/scenario.hpp"
#include "madtls/vectors.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kMismatch = 1;
constexpr int kUsage = 2;

int report_violations(const madtls::ScenarioError& e) {
  std::cerr << "invalid scenario:\n";
  if (e.violations().empty()) std::cerr << "  " << e.what() << "\n";
  for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
  return kUsage;
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw madtls::ScenarioError({"cannot read " + path});
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out, bool traces,
            bool verbose) {
  std::vector<madtls::sim::Scenario> scenarios;
  try {
    scenarios = madtls::sim::load_scenarios(path);
  } catch (const madtls::ScenarioError& e) {
    return report_violations(e);
  }
  std::vector<madtls::sim::RunReport> reports;
  std::size_t failed = 0;
  for (auto& sc : scenarios) {
    if (seed) sc.seed = *seed;
    madtls::sim::RunReport r;
    try {
      r = madtls::sim::run_scenario(sc);
    } catch (const madtls::ScenarioError& e) {
      return report_violations(e);
    }
    if (!r.passed()) ++failed;
    if (verbose || !r.passed() || scenarios.size() <= 8) std::cout << madtls::sim::to_text(r);
    reports.push_back(std::move(r));
  }
  std::cout << reports.size() << " scenario(s), " << failed << " failed\n";
  if (!out.empty() && !write_file(out, madtls::sim::to_json(reports, traces))) {
    std::cerr << "cannot write " << out << "\n";
    return kUsage;
  }
  return failed == 0 ? kOk : kMismatch;
}

int cmd_validate(const std::string& scenario, const std::string& vectors) {
  if (!vectors.empty()) {
    madtls::VectorCheck check;
    try {
      check = madtls::replay_vectors(madtls::VectorFile::parse(read_file(vectors)));
    } catch (const madtls::ScenarioError& e) {
      return report_violations(e);
    } catch (const madtls::Error& e) {
      std::cerr << "malformed vector file: " << e.what() << "\n";
      return kUsage;
    }
    for (const auto& f : check.failures) std::cout << "FAIL " << f << "\n";
    std::cout << check.checked << " vector checks, " << check.failures.size() << " failed\n";
    return check.ok() ? kOk : kMismatch;
  }
  try {
    const auto scenarios = madtls::sim::load_scenarios(scenario);
    std::cout << "valid: " << scenarios.size() << " scenario(s)\n";
    return kOk;
  } catch (const madtls::ScenarioError& e) {
    return report_violations(e);
  }
}

int cmd_vectors(std::uint64_t seed, const std::string& out) {
  const auto text = madtls::generate_vectors(seed).to_text();
  if (out.empty()) {
    std::cout << text;
    return kOk;
  }
  if (!write_file(out, text)) {
    std::cerr << "cannot write " << out << "\n";
    return kUsage;
  }
  return kOk;
}

int cmd_bench(const std::vector<std::size_t>& sizes, const std::vector<std::size_t>& contexts, std::size_t reps,
              std::uint64_t seed, const std::string& out) {
  for (auto s : sizes)
    if (s < 1 || s > 20) {
      std::cerr << "context sizes must lie in 1..20 bytes\n";
      return kUsage;
    }
  for (auto c : contexts)
    if (c < 1 || c > 5) {
      std::cerr << "context counts must lie in 1..5\n";
      return kUsage;
    }
  const auto result = madtls::run_bench(sizes, contexts, reps, seed);
  std::ostringstream table;
  table << "contexts,bytes,access,mac_calls,endpoint_mac_calls,mean_us\n";
  for (const auto& r : result.rows)
    table << r.contexts << "," << r.context_bytes << "," << r.access << "," << r.mac_calls << ","
          << r.endpoint_mac_calls << "," << std::fixed << std::setprecision(2) << r.mean_us << "\n";
  std::cout << table.str();
  if (!out.empty() && !write_file(out, table.str())) {
    std::cerr << "cannot write " << out << "\n";
    return kUsage;
  }
  for (const auto& f : result.failures) std::cerr << "FAIL " << f << "\n";
  return result.failures.empty() ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"madtls: middlebox-aware DTLS simulator and tools"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  std::string vectors;
  std::uint64_t seed = 1;
  bool traces = false;
  bool verbose = false;
  std::vector<std::size_t> sizes = {1, 5, 10, 20};
  std::vector<std::size_t> contexts = {1, 2, 3, 4, 5};
  std::size_t reps = 200;

  auto* run = app.add_subcommand("run", "Run a scenario file and compare verdicts with expectations");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  auto* run_seed = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out, "Write a JSON summary here");
  run->add_flag("--traces", traces, "Include per-hop traces in the summary");
  run->add_flag("-v,--verbose", verbose, "Print every scenario report");

  auto* validate = app.add_subcommand("validate", "Validate a scenario file or replay a vector file");
  auto* validate_scenario = validate->add_option("--scenario", scenario, "Scenario file");
  auto* validate_vectors = validate->add_option("--vectors", vectors, "Vector file to replay");
  validate_scenario->excludes(validate_vectors);

  auto* vec = app.add_subcommand("vectors", "Write deterministic golden vectors");
  vec->add_option("--seed", seed, "Seed");
  vec->add_option("--out", out, "Output file (stdout if omitted)");

  auto* bench = app.add_subcommand("bench", "Count MAC calls per hop across a context sweep");
  bench->add_option("--sizes", sizes, "Context sizes in bytes (1..20)")->delimiter(',');
  bench->add_option("--contexts", contexts, "Context counts (1..5)")->delimiter(',');
  bench->add_option("--reps", reps, "Repetitions per configuration");
  bench->add_option("--seed", seed, "Seed");
  bench->add_option("--out", out, "Write the table as CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(scenario, run_seed->count() > 0 ? std::optional(seed) : std::nullopt, out, traces, verbose);
    if (*validate) {
      if (scenario.empty() && vectors.empty()) {
        std::cerr << "validate needs --scenario or --vectors\n";
        return kUsage;
      }
      return cmd_validate(scenario, vectors);
    }
    if (*vec) return cmd_vectors(seed, out);
    if (*bench) return cmd_bench(sizes, contexts, reps, seed, out);
  } catch (const madtls::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
