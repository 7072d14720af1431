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

#ifndef STOCHOPT_SEARCH_HPP
#define STOCHOPT_SEARCH_HPP

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "stochopt/cost.hpp"
#include "stochopt/mcmc.hpp"
#include "stochopt/testgen.hpp"
#include "stochopt/verify.hpp"

namespace stochopt {

// ---------------------------------------------------------------------------
// Two-phase pipeline: synthesis chains (correctness-only cost) from random
// starts, optimization chains (correctness + latency) from the target and the
// surviving candidates, then reranking.
//
// Workers run in epoch lockstep: every `epoch` proposals the coordinator
// joins them, merges freshly discovered counterexamples in worker-index
// order, and rebroadcasts the grown suite. Reports are therefore
// byte-reproducible for fixed seeds and proposal budgets regardless of
// thread scheduling.
// ---------------------------------------------------------------------------

// A phase stops at whichever limit is hit first; a field of zero disables
// that limit. Both zero is the empty budget: the phase runs no proposals.
// Wall-clock limits break byte-level reproducibility; proposal limits do not.
struct Budget {
  uint64_t proposals = 0;
  uint64_t wall_ms = 0;
  bool empty() const { return proposals == 0 && wall_ms == 0; }
};

struct SearchConfig {
  int synthesis_workers = 2;
  int optimization_workers = 2;
  Budget synthesis_budget{0, 30 * 60 * 1000};     // 30 minutes
  Budget optimization_budget{0, 30 * 60 * 1000};  // 30 minutes
  double rerank_window = 0.20;
  uint64_t master_seed = 1;
  uint64_t epoch = 8192;       // proposals between counterexample syncs
  size_t max_testcases = 1024; // suite growth cap
  size_t keep_candidates = 32; // distinct candidates retained per phase
  size_t rewrite_capacity = 0; // synthesis slot count; 0 falls back to the
                               // target program's capacity (JobConfig fills
                               // this in via search_config())

  // Throws std::invalid_argument on non-positive worker counts or a window
  // outside [0, 1].
  void validate() const;
};

// Deterministic per-worker seed stream.
uint64_t worker_seed(uint64_t master_seed, int phase, int worker);

struct SearchResult {
  Program rewrite;
  std::string text;  // canonical form
  CostReport cost;   // against the final suite
  Validation validated = Validation::NotAttempted;
  uint64_t perf = 0;  // static latency estimate
  struct Provenance {
    std::string phase;
    int worker = -1;
    uint64_t seed = 0;
    uint64_t proposals = 0;  // worker's proposal count when found
  } provenance;
};

// Percentage of reference's active instructions also present in current
// (multiset intersection over |active(reference)|). 100 when the reference
// has no active instructions.
double overlap_diagnostic(const Program& current, const Program& reference);

// Latency-weighted emulated execution cost over a suite: the rerank measure.
// Straight-line programs execute every active instruction on every testcase,
// so this equals |tau| * perf_estimate; kept as an explicit measurement so the
// rerank contract is visible.
uint64_t emulated_latency(const Program& p, size_t tau_size,
                          const LatencyTable& lat,
                          const Isa& isa = Isa::instance());

// Picks the winner among results: filters to total <= (1+window)*min_total,
// orders by emulated latency, then static latency, then active length, then
// canonical text. Permutation-invariant. Throws std::invalid_argument when
// `results` is empty.
SearchResult rerank(const std::vector<SearchResult>& results, size_t tau_size,
                    const LatencyTable& lat, double window,
                    const Isa& isa = Isa::instance());

// Uniform random program: active length uniform in [1, capacity], contents
// sampled like the Instruction move (sans the UNUSED token).
Program random_program(const ProposalUniverse& u, size_t capacity, Rng& rng);

// Sampled time series of one chain's progress, for the stats tooling.
struct TraceRecord {
  std::string phase;
  int worker = 0;
  uint64_t proposal = 0;
  uint64_t current_total = 0;
  uint64_t best_total = 0;
  uint64_t eq_term = 0;
  uint64_t perf_term = 0;
  uint64_t testcases_evaluated = 0;  // cumulative
  uint64_t testcases_last = 0;       // used by the sampled step
  std::string current_text;
  std::string best_text;
};

class TraceLog {
 public:
  explicit TraceLog(uint64_t every = 1024) : every_(every) {}
  uint64_t every() const { return every_; }
  void add(TraceRecord r) { records_.push_back(std::move(r)); }
  const std::vector<TraceRecord>& records() const { return records_; }
  void sort_canonical();
  void write_jsonl(const std::string& path) const;

 private:
  uint64_t every_;
  std::vector<TraceRecord> records_;
};

std::vector<TraceRecord> read_trace_jsonl(const std::string& path);

class SearchDriver {
 public:
  SearchDriver(const TargetSpec& spec, std::vector<Testcase> tau,
               const ProposalUniverse& universe, MoveParams moves,
               CostParams cost_params, const LatencyTable& latencies,
               OracleVerifier& verifier, SearchConfig cfg,
               const Isa& isa = Isa::instance());

  // Launches synthesis chains from random starts; returns every candidate
  // that passed the whole suite (verifier-classified) plus each chain's best.
  std::vector<SearchResult> synthesize();

  // Optimization chains from `starts` (the target is always prepended).
  // Results keep only candidates that are proven or pass the final suite.
  std::vector<SearchResult> optimize(std::vector<Program> starts);

  struct PipelineOutput {
    std::vector<SearchResult> synthesis;
    std::vector<SearchResult> optimization;
    std::optional<SearchResult> best;  // empty: nothing proven or suite-clean
    uint64_t synthesis_proposals = 0;
    uint64_t optimization_proposals = 0;
    size_t final_tau_size = 0;
  };
  // synthesize -> optimize(target + candidates) -> rerank.
  PipelineOutput run();

  const std::vector<Testcase>& tau() const { return tau_; }
  void set_trace(TraceLog* log) { trace_ = log; }

  // Cooperative cancellation: checked between epochs. When the flag flips
  // the current phase drains normally, so best-so-far is still returned.
  void set_cancel(const std::atomic<bool>* flag) { cancel_ = flag; }

  // Aggregated chain statistics of everything run so far.
  const ChainStats& stats() const { return stats_; }

 private:
  struct Phase;
  std::vector<SearchResult> run_phase(Phase& phase);

  const TargetSpec* spec_;
  std::vector<Testcase> tau_;
  const ProposalUniverse* universe_;
  MoveParams moves_;
  CostParams cost_params_;
  const LatencyTable* latencies_;
  OracleVerifier* verifier_;
  SearchConfig cfg_;
  const Isa* isa_;
  TraceLog* trace_ = nullptr;
  const std::atomic<bool>* cancel_ = nullptr;
  ChainStats stats_;
};

}  // namespace stochopt

#endif  // STOCHOPT_SEARCH_HPP
