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

#include "stochopt/search.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "stochopt/asm_text.hpp"

namespace stochopt {

void SearchConfig::validate() const {
  if (synthesis_workers < 1 || optimization_workers < 1)
    throw std::invalid_argument("search: worker counts must be >= 1");
  if (!(rerank_window >= 0.0 && rerank_window <= 1.0))
    throw std::invalid_argument("search: rerank window must lie in [0, 1]");
  if (epoch == 0) throw std::invalid_argument("search: epoch must be positive");
  if (max_testcases == 0)
    throw std::invalid_argument("search: max_testcases must be positive");
  if (keep_candidates == 0)
    throw std::invalid_argument("search: keep_candidates must be positive");
}

uint64_t worker_seed(uint64_t master_seed, int phase, int worker) {
  return derive_seed(master_seed,
                     (static_cast<uint64_t>(static_cast<uint32_t>(phase)) << 32) |
                         static_cast<uint32_t>(worker));
}

double overlap_diagnostic(const Program& current, const Program& reference) {
  const Isa& isa = Isa::instance();
  std::map<std::string, int> ref_counts;
  size_t ref_total = 0;
  for (const Instruction& ins : reference.slots) {
    if (ins.unused()) continue;
    ++ref_counts[format_instruction(ins, isa)];
    ++ref_total;
  }
  if (ref_total == 0) return 100.0;
  size_t hits = 0;
  for (const Instruction& ins : current.slots) {
    if (ins.unused()) continue;
    auto it = ref_counts.find(format_instruction(ins, isa));
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ref_total);
}

uint64_t emulated_latency(const Program& p, size_t tau_size,
                          const LatencyTable& lat, const Isa& isa) {
  // Straight-line code: every testcase executes every active instruction.
  return static_cast<uint64_t>(tau_size) * perf_estimate(p, lat, isa);
}

SearchResult rerank(const std::vector<SearchResult>& results, size_t tau_size,
                    const LatencyTable& lat, double window, const Isa& isa) {
  if (results.empty())
    throw std::invalid_argument("rerank: result set is empty");

  uint64_t min_total = std::numeric_limits<uint64_t>::max();
  for (const SearchResult& r : results) min_total = std::min(min_total, r.cost.total);
  const double cutoff = (1.0 + window) * static_cast<double>(min_total) + 1e-9;

  const SearchResult* best = nullptr;
  uint64_t best_emulated = 0, best_static = 0;
  size_t best_len = 0;
  std::string best_text;
  for (const SearchResult& r : results) {
    if (static_cast<double>(r.cost.total) > cutoff) continue;
    uint64_t em = emulated_latency(r.rewrite, tau_size, lat, isa);
    uint64_t st = perf_estimate(r.rewrite, lat, isa);
    size_t len = r.rewrite.active_count();
    std::string text = format_program(r.rewrite, isa);
    bool better;
    if (!best) {
      better = true;
    } else if (em != best_emulated) {
      better = em < best_emulated;
    } else if (st != best_static) {
      better = st < best_static;
    } else if (len != best_len) {
      better = len < best_len;
    } else {
      better = text < best_text;
    }
    if (better) {
      best = &r;
      best_emulated = em;
      best_static = st;
      best_len = len;
      best_text = std::move(text);
    }
  }
  // min_total always survives the window filter.
  return *best;
}

Program random_program(const ProposalUniverse& u, size_t capacity, Rng& rng) {
  Program p(capacity);
  uint64_t len = 1 + rng.below(capacity);
  for (uint64_t i = 0; i < len; ++i) p.slots[i] = u.sample_instruction(rng);
  return p;
}

// ---------------------------------------------------------------------------
// Trace log
// ---------------------------------------------------------------------------

void TraceLog::sort_canonical() {
  std::stable_sort(records_.begin(), records_.end(),
                   [](const TraceRecord& a, const TraceRecord& b) {
                     if (a.phase != b.phase) return a.phase < b.phase;
                     if (a.worker != b.worker) return a.worker < b.worker;
                     return a.proposal < b.proposal;
                   });
}

void TraceLog::write_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("trace: cannot open " + path);
  for (const TraceRecord& r : records_) {
    nlohmann::json j;
    j["phase"] = r.phase;
    j["worker"] = r.worker;
    j["proposal"] = r.proposal;
    j["current_total"] = r.current_total;
    j["best_total"] = r.best_total;
    j["eq_term"] = r.eq_term;
    j["perf_term"] = r.perf_term;
    j["testcases_evaluated"] = r.testcases_evaluated;
    j["testcases_last"] = r.testcases_last;
    j["current_text"] = r.current_text;
    j["best_text"] = r.best_text;
    out << j.dump() << '\n';
  }
}

std::vector<TraceRecord> read_trace_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  std::vector<TraceRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("trace: line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    TraceRecord r;
    r.phase = j.value("phase", std::string());
    r.worker = j.value("worker", 0);
    r.proposal = j.value("proposal", uint64_t{0});
    r.current_total = j.value("current_total", uint64_t{0});
    r.best_total = j.value("best_total", uint64_t{0});
    r.eq_term = j.value("eq_term", uint64_t{0});
    r.perf_term = j.value("perf_term", uint64_t{0});
    r.testcases_evaluated = j.value("testcases_evaluated", uint64_t{0});
    r.testcases_last = j.value("testcases_last", uint64_t{0});
    r.current_text = j.value("current_text", std::string());
    r.best_text = j.value("best_text", std::string());
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Search driver
// ---------------------------------------------------------------------------

struct SearchDriver::Phase {
  const char* name = "";
  int id = 0;  // seed stream discriminator
  CostMode mode = CostMode::Synthesis;
  int workers = 1;
  Budget budget;
  std::vector<Program> starts;  // cycled over workers
  bool keep_bests_unconditionally = false;  // synthesis reports chain bests
  bool include_starts = false;              // optimization reports its starts
};

SearchDriver::SearchDriver(const TargetSpec& spec, std::vector<Testcase> tau,
                           const ProposalUniverse& universe, MoveParams moves,
                           CostParams cost_params,
                           const LatencyTable& latencies,
                           OracleVerifier& verifier, SearchConfig cfg,
                           const Isa& isa)
    : spec_(&spec),
      tau_(std::move(tau)),
      universe_(&universe),
      moves_(moves),
      cost_params_(cost_params),
      latencies_(&latencies),
      verifier_(&verifier),
      cfg_(cfg),
      isa_(&isa) {
  cfg_.validate();
  moves_.validate();
  if (tau_.empty())
    throw std::invalid_argument("search: testcase suite is empty");
}

namespace {

struct WorkerCtx {
  std::unique_ptr<EvalContext> ectx;
  std::unique_ptr<TestcaseCostModel> model;
  std::unique_ptr<Chain> chain;
  uint64_t seed = 0;
  uint64_t quota = 0;
  uint64_t done = 0;
  std::vector<SearchResult> found;  // suite-clean proposals, capped
  std::vector<TraceRecord> trace;
};

// Capped insert: keep the lowest-total candidates, earliest first on ties.
void record_candidate(WorkerCtx& c, SearchResult r, size_t cap) {
  for (const SearchResult& f : c.found)
    if (f.text == r.text) return;
  if (c.found.size() < cap) {
    c.found.push_back(std::move(r));
    return;
  }
  size_t worst = 0;
  for (size_t i = 1; i < c.found.size(); ++i)
    if (c.found[i].cost.total >= c.found[worst].cost.total) worst = i;
  if (r.cost.total < c.found[worst].cost.total) c.found[worst] = std::move(r);
}

}  // namespace

std::vector<SearchResult> SearchDriver::run_phase(Phase& ph) {
  const bool zero_budget = ph.budget.proposals == 0 && ph.budget.wall_ms == 0;
  if (zero_budget && !ph.include_starts) return {};

  const int W = ph.workers;
  std::vector<WorkerCtx> ws(static_cast<size_t>(W));
  for (int w = 0; w < W; ++w) {
    WorkerCtx& c = ws[static_cast<size_t>(w)];
    c.seed = worker_seed(cfg_.master_seed, ph.id, w);
    c.ectx = std::make_unique<EvalContext>(
        EvalContext{cost_params_, ph.mode, latencies_, verifier_});
    c.model = std::make_unique<TestcaseCostModel>(*c.ectx, tau_,
                                                  cfg_.max_testcases, *isa_);
    const Program& start = ph.starts[static_cast<size_t>(w) % ph.starts.size()];
    c.chain = std::make_unique<Chain>(start, *universe_, moves_, c.seed,
                                      *c.model);
    c.quota = ph.budget.proposals
                  ? (ph.budget.proposals + static_cast<uint64_t>(W) - 1) /
                        static_cast<uint64_t>(W)
                  : std::numeric_limits<uint64_t>::max();
  }

  // Counterexample sync: drain fresh testcases in worker order, grow the
  // master suite, rebroadcast, and recompute stale chain costs.
  auto sync = [&]() {
    std::vector<Testcase> batch;
    for (WorkerCtx& c : ws) {
      for (Testcase& tc : c.model->drain_fresh()) {
        bool dup = false;
        for (const Testcase& t : tau_)
          if (t.input == tc.input) { dup = true; break; }
        for (const Testcase& t : batch)
          if (t.input == tc.input) { dup = true; break; }
        if (!dup && tau_.size() + batch.size() < cfg_.max_testcases)
          batch.push_back(std::move(tc));
      }
    }
    if (batch.empty()) return;
    for (const Testcase& tc : batch) tau_.push_back(tc);
    for (WorkerCtx& c : ws) {
      bool grew = false;
      for (const Testcase& tc : batch) grew |= c.model->refine(tc);
      if (grew) c.chain->recompute_costs();
    }
  };

  // Chain construction may already have refuted a start.
  sync();

  auto worker_epoch = [&](int w) {
    WorkerCtx& c = ws[static_cast<size_t>(w)];
    uint64_t steps = std::min<uint64_t>(cfg_.epoch, c.quota - c.done);
    for (uint64_t k = 0; k < steps; ++k) {
      StepInfo info = c.chain->step();
      ++c.done;
      const CostReport& rep = info.proposal_report;
      if (rep.validated == Validation::Proven ||
          rep.validated == Validation::Unverified) {
        SearchResult r;
        r.rewrite = c.chain->last_proposal();
        r.text = format_program(r.rewrite, *isa_);
        r.cost = rep;
        r.validated = rep.validated;
        r.perf = perf_estimate(r.rewrite, *latencies_, *isa_);
        r.provenance = {ph.name, w, c.seed, c.done};
        record_candidate(c, std::move(r), cfg_.keep_candidates);
      }
      if (trace_ && c.done % trace_->every() == 0) {
        TraceRecord tr;
        tr.phase = ph.name;
        tr.worker = w;
        tr.proposal = c.done;
        tr.current_total = c.chain->current_cost().total;
        tr.best_total = c.chain->best_cost().total;
        tr.eq_term = c.chain->current_cost().eq_term;
        tr.perf_term = c.chain->current_cost().perf_term;
        tr.testcases_evaluated = c.chain->stats().testcases_evaluated;
        tr.testcases_last = info.testcases_used;
        tr.current_text = format_program(c.chain->current(), *isa_);
        tr.best_text = format_program(c.chain->best(), *isa_);
        c.trace.push_back(std::move(tr));
      }
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  auto wall_exceeded = [&]() {
    if (ph.budget.wall_ms == 0) return false;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    return static_cast<uint64_t>(ms) >= ph.budget.wall_ms;
  };

  auto cancelled = [&]() { return cancel_ && cancel_->load(std::memory_order_relaxed); };

  bool work_left = !zero_budget;
  while (work_left && !wall_exceeded() && !cancelled()) {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(W));
    for (int w = 0; w < W; ++w)
      if (ws[static_cast<size_t>(w)].done < ws[static_cast<size_t>(w)].quota)
        threads.emplace_back(worker_epoch, w);
    if (threads.empty()) break;
    for (std::thread& t : threads) t.join();
    sync();
    work_left = false;
    for (const WorkerCtx& c : ws) work_left |= c.done < c.quota;
  }

  for (const WorkerCtx& c : ws) stats_.add(c.chain->stats());
  if (trace_)
    for (WorkerCtx& c : ws)
      for (TraceRecord& tr : c.trace) trace_->add(std::move(tr));

  // Deterministic pre-retention pool: assigned starts, then candidates, then
  // chain bests, worker order throughout.
  struct Entry {
    SearchResult r;
    bool always_keep = false;
  };
  std::vector<Entry> pool;
  if (ph.include_starts) {
    for (size_t i = 0; i < ph.starts.size(); ++i) {
      SearchResult r;
      r.rewrite = ph.starts[i];
      r.provenance.phase = ph.name;
      r.provenance.worker =
          i < static_cast<size_t>(W) ? static_cast<int>(i) : -1;
      r.provenance.seed = i < static_cast<size_t>(W)
                              ? ws[i].seed
                              : cfg_.master_seed;
      r.provenance.proposals = 0;
      pool.push_back({std::move(r), false});
    }
  }
  for (const WorkerCtx& c : ws)
    for (const SearchResult& r : c.found) pool.push_back({r, false});
  for (int w = 0; w < W; ++w) {
    const WorkerCtx& c = ws[static_cast<size_t>(w)];
    SearchResult r;
    r.rewrite = c.chain->best();
    r.provenance = {ph.name, w, c.seed, c.done};
    pool.push_back({std::move(r), ph.keep_bests_unconditionally});
  }

  // Final pass over the full suite; retention requires a proof or a clean
  // suite run (chain bests are reported regardless in synthesis).
  EvalContext fctx{cost_params_, ph.mode, latencies_, verifier_};
  std::vector<SearchResult> out;
  std::set<std::string> seen;
  for (Entry& e : pool) {
    std::string text = format_program(e.r.rewrite, *isa_);
    if (!seen.insert(text).second) continue;
    EvalResult ev = evaluate_cost(e.r.rewrite, tau_, fctx,
                                  std::numeric_limits<double>::infinity(),
                                  *isa_);
    SearchResult fin = std::move(e.r);
    fin.text = std::move(text);
    fin.cost = ev.report;
    fin.validated = ev.report.validated;
    fin.perf = perf_estimate(fin.rewrite, *latencies_, *isa_);
    bool correct = fin.validated == Validation::Proven ||
                   (fin.validated == Validation::Unverified &&
                    fin.cost.eq_term == 0);
    if (correct || e.always_keep) out.push_back(std::move(fin));
  }
  return out;
}

std::vector<SearchResult> SearchDriver::synthesize() {
  Phase ph;
  ph.name = "synthesis";
  ph.id = 0;
  ph.mode = CostMode::Synthesis;
  ph.workers = cfg_.synthesis_workers;
  ph.budget = cfg_.synthesis_budget;
  ph.keep_bests_unconditionally = true;
  ph.include_starts = false;
  const size_t capacity = cfg_.rewrite_capacity ? cfg_.rewrite_capacity
                                                : spec_->target.capacity();
  for (int w = 0; w < ph.workers; ++w) {
    Rng rng(derive_seed(worker_seed(cfg_.master_seed, ph.id, w), 0x57A7));
    ph.starts.push_back(random_program(*universe_, capacity, rng));
  }
  return run_phase(ph);
}

std::vector<SearchResult> SearchDriver::optimize(std::vector<Program> starts) {
  Phase ph;
  ph.name = "optimization";
  ph.id = 1;
  ph.mode = CostMode::Optimization;
  ph.workers = cfg_.optimization_workers;
  ph.budget = cfg_.optimization_budget;
  ph.keep_bests_unconditionally = false;
  ph.include_starts = true;
  ph.starts.push_back(spec_->target);
  for (Program& s : starts) ph.starts.push_back(std::move(s));
  return run_phase(ph);
}

SearchDriver::PipelineOutput SearchDriver::run() {
  PipelineOutput out;
  uint64_t before = stats_.proposals;
  out.synthesis = synthesize();
  out.synthesis_proposals = stats_.proposals - before;

  std::vector<Program> starts;
  std::set<std::string> seen;
  seen.insert(format_program(spec_->target, *isa_));
  for (const SearchResult& r : out.synthesis) {
    if (r.validated != Validation::Proven &&
        r.validated != Validation::Unverified)
      continue;
    if (r.cost.eq_term != 0) continue;
    if (starts.size() >= cfg_.keep_candidates) break;
    if (seen.insert(r.text).second) starts.push_back(r.rewrite);
  }

  before = stats_.proposals;
  out.optimization = optimize(std::move(starts));
  out.optimization_proposals = stats_.proposals - before;

  std::vector<SearchResult> proven, unverified;
  for (const SearchResult& r : out.optimization) {
    if (r.cost.eq_term != 0) continue;  // final-suite guarantee
    if (r.validated == Validation::Proven)
      proven.push_back(r);
    else if (r.validated == Validation::Unverified)
      unverified.push_back(r);
  }
  const std::vector<SearchResult>& pick = proven.empty() ? unverified : proven;
  if (!pick.empty())
    out.best = rerank(pick, tau_.size(), *latencies_, cfg_.rerank_window,
                      *isa_);
  out.final_tau_size = tau_.size();
  return out;
}

}  // namespace stochopt
