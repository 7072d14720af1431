// Copyright 2026 The Stochopt Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STOCHOPT_JOB_HPP
#define STOCHOPT_JOB_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "stochopt/cost.hpp"
#include "stochopt/mcmc.hpp"
#include "stochopt/search.hpp"
#include "stochopt/testgen.hpp"
#include "stochopt/verify.hpp"

namespace stochopt {

// Flag mask <-> names like "cf", "zf".
std::string flags_names(uint8_t mask);
uint8_t parse_flag_name(const std::string& name);  // throws on unknown

// Everything one driver invocation needs: the target, its observable
// contract, testcase sourcing, and parameter overrides. Loadable from JSON
// ("stochopt-job" schema, version 1) with defaults for every omitted field.
struct JobConfig {
  std::string name = "job";
  std::string target_text;  // mini-ISA assembly
  size_t capacity = 50;

  std::vector<Reg> live_in_regs;
  std::vector<MemSpan> live_in_mem;
  std::vector<Reg> live_out_regs;
  uint8_t live_out_flags = 0;
  std::vector<MemSpan> live_out_mem;
  std::vector<RegAnnotation> annotations;

  std::string testcase_path;  // when set, the suite is loaded, not generated
  size_t testcase_count = 32;
  uint64_t testcase_seed = 1;

  CostParams cost;
  MoveParams moves;
  SearchConfig search;
  VerifyConfig verify;

  // Move-proposal universe; opcodes are mnemonics (all operand forms of each
  // listed mnemonic), empty means the whole roster. The target's contents are
  // always absorbed so every program the chains can start from stays
  // reachable by the proposal distribution.
  std::vector<std::string> universe_mnemonics;
  std::vector<std::string> universe_registers;
  std::vector<uint64_t> universe_constants;
  bool universe_default_bag = true;
  std::vector<MemRef> universe_mem;

  // Throws std::invalid_argument on out-of-range parameters. Notably the
  // relaxed register metric needs w_m >= 1: with w_m = 0 a zero equality cost
  // would no longer pin values to their expected registers.
  void validate() const;

  TargetSpec make_spec(const Isa& isa = Isa::instance()) const;
  ProposalUniverse make_universe(const TargetSpec& spec,
                                 const Isa& isa = Isa::instance()) const;
  std::vector<Testcase> make_suite(const TargetSpec& spec,
                                   const Isa& isa = Isa::instance()) const;

  // The search parameters with the job-level slot capacity filled in: unless
  // an explicit rewrite_capacity override is present, synthesis chains run at
  // `capacity` slots even when the target itself needs more lines. Drivers
  // should be built from this, not from `search` directly.
  SearchConfig search_config() const;
};

nlohmann::json job_to_json(const JobConfig& job);
JobConfig job_from_json(const nlohmann::json& j);  // throws on bad input
JobConfig load_job(const std::string& path);
void save_job(const JobConfig& job, const std::string& path);

// ---------------------------------------------------------------------------
// Result reports ("stochopt-result" schema, version 1). Deterministic given
// deterministic inputs: no timestamps, no throughput, keys sorted.
// ---------------------------------------------------------------------------

enum class RunOutcome { Proven, Unverified, NotFound };
const char* outcome_name(RunOutcome o);

// Exit-code table: 0 proven, 2 unverified, 3 not-found (1 is reserved for
// usage/config/runtime errors and produced by the CLI itself).
int outcome_exit_code(RunOutcome o);

struct ResultReport {
  std::string job;
  std::string command;
  RunOutcome outcome = RunOutcome::NotFound;
  bool has_best = false;
  SearchResult best;
  std::string target_text;
  uint64_t target_latency = 0;
  size_t target_active = 0;
  size_t testcases = 0;
  uint64_t synthesis_proposals = 0;
  uint64_t optimization_proposals = 0;
  std::vector<SearchResult> synthesis;
  std::vector<SearchResult> optimization;
  ChainStats stats;
};

nlohmann::json report_to_json(const ResultReport& r);
std::string report_to_string(const ResultReport& r);  // canonical bytes

}  // namespace stochopt

#endif  // STOCHOPT_JOB_HPP
