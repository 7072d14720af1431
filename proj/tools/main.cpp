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

// stochopt command-line front end.
//
// Every command prints a human-readable summary to stdout followed by (or,
// with --json FILE, instead writing) a machine-readable JSON document. The
// canonical reports contain no timestamps or throughput numbers, so a fixed
// seed and proposal budget reproduce them byte for byte. Exit codes:
//   0  best rewrite proven equivalent (or the command simply succeeded)
//   2  best rewrite passes all testcases but is not proven
//   3  no rewrite found
//   1  usage, config, I/O, or verifier-infeasibility errors

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stochopt/asm_text.hpp"
#include "stochopt/bench.hpp"
#include "stochopt/cost.hpp"
#include "stochopt/isa.hpp"
#include "stochopt/job.hpp"
#include "stochopt/machine.hpp"
#include "stochopt/mcmc.hpp"
#include "stochopt/search.hpp"
#include "stochopt/testgen.hpp"
#include "stochopt/verify.hpp"

namespace so = stochopt;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

constexpr uint64_t kU64Unset = ~0ull;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Upper bound on instruction count: enough slots to parse any program text.
size_t line_capacity(const std::string& text) {
  size_t n = 1;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

so::Program parse_loose(const std::string& text, const so::Isa& isa) {
  return so::parse_program(text, line_capacity(text), isa);
}

// -----------------------------------------------------------------------
// Job resolution: --kernel beats --config beats $STOCHOPT_CONFIG.
// -----------------------------------------------------------------------

so::JobConfig resolve_job(const std::string& config_path,
                          const std::string& kernel) {
  if (!kernel.empty()) {
    const so::BenchKernel* k = so::find_kernel(kernel);
    if (!k) throw std::runtime_error("unknown kernel: " + kernel);
    return k->job;
  }
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("STOCHOPT_CONFIG")) path = env;
  }
  if (path.empty())
    throw std::runtime_error(
        "no job given: pass --config FILE, --kernel NAME, or set "
        "STOCHOPT_CONFIG");
  return so::load_job(path);
}

// Flag overrides layered on top of the resolved job config.
struct Overrides {
  uint64_t master_seed = kU64Unset;
  uint64_t testcase_seed = kU64Unset;
  uint64_t synth_proposals = kU64Unset;
  uint64_t opt_proposals = kU64Unset;
  uint64_t synth_wall_ms = kU64Unset;
  uint64_t opt_wall_ms = kU64Unset;
  uint64_t epoch = kU64Unset;
  int64_t testcase_count = -1;
  int64_t capacity = -1;
  int64_t rewrite_capacity = -1;
  int64_t keep_candidates = -1;
  int64_t max_testcases = -1;
  int synth_workers = -1;
  int opt_workers = -1;
  int width_cap = -1;
  double window = -1.0;
  double beta = -1.0;
  int metric = -1;  // 0 strict, 1 improved
  std::string strategy;
  std::string testcase_path;

  void apply(so::JobConfig& job) const {
    if (master_seed != kU64Unset) job.search.master_seed = master_seed;
    if (testcase_seed != kU64Unset) job.testcase_seed = testcase_seed;
    if (synth_proposals != kU64Unset)
      job.search.synthesis_budget.proposals = synth_proposals;
    if (opt_proposals != kU64Unset)
      job.search.optimization_budget.proposals = opt_proposals;
    if (synth_wall_ms != kU64Unset)
      job.search.synthesis_budget.wall_ms = synth_wall_ms;
    if (opt_wall_ms != kU64Unset)
      job.search.optimization_budget.wall_ms = opt_wall_ms;
    if (epoch != kU64Unset) job.search.epoch = epoch;
    if (testcase_count >= 0)
      job.testcase_count = static_cast<size_t>(testcase_count);
    if (capacity >= 0) job.capacity = static_cast<size_t>(capacity);
    if (rewrite_capacity >= 0)
      job.search.rewrite_capacity = static_cast<size_t>(rewrite_capacity);
    if (keep_candidates >= 0)
      job.search.keep_candidates = static_cast<size_t>(keep_candidates);
    if (max_testcases >= 0)
      job.search.max_testcases = static_cast<size_t>(max_testcases);
    if (synth_workers >= 0) job.search.synthesis_workers = synth_workers;
    if (opt_workers >= 0) job.search.optimization_workers = opt_workers;
    if (width_cap >= 0) job.verify.width_cap = static_cast<uint8_t>(width_cap);
    if (window >= 0.0) job.search.rerank_window = window;
    if (beta > 0.0) job.moves.beta = beta;
    if (metric == 0) job.cost.improved_metric = false;
    if (metric == 1) job.cost.improved_metric = true;
    if (!strategy.empty()) {
      if (strategy == "exhaustive")
        job.verify.strategy = so::VerifyConfig::Strategy::Exhaustive;
      else if (strategy == "random")
        job.verify.strategy = so::VerifyConfig::Strategy::Random;
      else if (strategy == "exhaustive+random")
        job.verify.strategy = so::VerifyConfig::Strategy::ExhaustiveThenRandom;
      else
        throw std::runtime_error("unknown verify strategy: " + strategy);
    }
    if (!testcase_path.empty()) job.testcase_path = testcase_path;
  }
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.master_seed, "master search seed");
  cmd->add_option("--testcase-seed", o.testcase_seed,
                  "testcase generation seed");
  cmd->add_option("--testcase-count", o.testcase_count,
                  "generated testcase count");
  cmd->add_option("--testcases", o.testcase_path,
                  "load the suite from this file instead of generating");
  cmd->add_option("--synth-proposals", o.synth_proposals,
                  "synthesis proposal budget (0 disables the limit)");
  cmd->add_option("--opt-proposals", o.opt_proposals,
                  "optimization proposal budget (0 disables the limit)");
  cmd->add_option("--synth-wall-ms", o.synth_wall_ms,
                  "synthesis wall-clock budget in ms (0 disables; "
                  "breaks reproducibility)");
  cmd->add_option("--opt-wall-ms", o.opt_wall_ms,
                  "optimization wall-clock budget in ms (0 disables; "
                  "breaks reproducibility)");
  cmd->add_option("--synth-workers", o.synth_workers, "synthesis chain count");
  cmd->add_option("--opt-workers", o.opt_workers, "optimization chain count");
  cmd->add_option("--capacity", o.capacity, "rewrite slot capacity");
  cmd->add_option("--rewrite-capacity", o.rewrite_capacity,
                  "synthesis slot count (default: the job capacity)");
  cmd->add_option("--epoch", o.epoch,
                  "proposals between counterexample syncs");
  cmd->add_option("--keep", o.keep_candidates,
                  "distinct candidates retained per phase");
  cmd->add_option("--max-testcases", o.max_testcases, "suite growth cap");
  cmd->add_option("--window", o.window, "rerank cost window (e.g. 0.2)");
  cmd->add_option("--beta", o.beta, "acceptance temperature");
  cmd->add_flag_callback("--strict-metric", [&o]() { o.metric = 0; },
                         "charge live-out registers in place only");
  cmd->add_flag_callback("--improved-metric", [&o]() { o.metric = 1; },
                         "allow misplaced live-out values at a penalty");
  cmd->add_option("--width-cap", o.width_cap,
                  "verifier per-input enumeration width (bits)");
  cmd->add_option("--strategy", o.strategy,
                  "verify strategy: exhaustive|random|exhaustive+random");
}

// -----------------------------------------------------------------------
// Report assembly shared by synthesize / optimize / run.
// -----------------------------------------------------------------------

std::optional<so::SearchResult> pick_best(
    const std::vector<so::SearchResult>& results, size_t tau_size,
    const so::LatencyTable& lat, double window, const so::Isa& isa) {
  std::vector<so::SearchResult> proven, clean;
  for (const so::SearchResult& r : results) {
    if (r.validated == so::Validation::Proven)
      proven.push_back(r);
    else if (r.validated == so::Validation::Unverified && r.cost.eq_term == 0)
      clean.push_back(r);
  }
  const std::vector<so::SearchResult>& pool = proven.empty() ? clean : proven;
  if (pool.empty()) return std::nullopt;
  return so::rerank(pool, tau_size, lat, window, isa);
}

void print_program_indented(const std::string& text) {
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) std::printf("  %s\n", line.c_str());
}

enum class RunMode { SynthesisOnly, OptimizationOnly, Full };

int run_search_command(so::JobConfig job, RunMode mode,
                       const std::string& json_path,
                       const std::string& trace_path, uint64_t trace_every) {
  job.validate();
  const so::Isa& isa = so::Isa::instance();
  so::LatencyTable lat(isa);
  so::TargetSpec spec = job.make_spec(isa);
  so::ProposalUniverse universe = job.make_universe(spec, isa);
  std::vector<so::Testcase> tau = job.make_suite(spec, isa);
  so::OracleVerifier verifier(spec, job.verify, isa);

  so::SearchDriver driver(spec, tau, universe, job.moves, job.cost, lat,
                          verifier, job.search_config(), isa);
  driver.set_cancel(&g_interrupted);
  so::TraceLog trace(trace_every);
  if (!trace_path.empty()) driver.set_trace(&trace);

  if (mode != RunMode::OptimizationOnly && job.search.synthesis_budget.empty())
    std::fprintf(stderr,
                 "warning: synthesis budget is zero; the phase runs nothing\n");
  if (mode != RunMode::SynthesisOnly &&
      job.search.optimization_budget.empty())
    std::fprintf(
        stderr,
        "warning: optimization budget is zero; the phase runs nothing\n");

  so::ResultReport rep;
  rep.job = job.name;
  rep.target_text = so::format_program(spec.target, isa);
  rep.target_latency = so::perf_estimate(spec.target, lat, isa);
  rep.target_active = spec.target.active_count();

  std::optional<so::SearchResult> best;
  switch (mode) {
    case RunMode::Full: {
      rep.command = "run";
      so::SearchDriver::PipelineOutput out = driver.run();
      rep.synthesis = std::move(out.synthesis);
      rep.optimization = std::move(out.optimization);
      rep.synthesis_proposals = out.synthesis_proposals;
      rep.optimization_proposals = out.optimization_proposals;
      best = std::move(out.best);
      break;
    }
    case RunMode::SynthesisOnly: {
      rep.command = "synthesize";
      rep.synthesis = driver.synthesize();
      rep.synthesis_proposals = driver.stats().proposals;
      best = pick_best(rep.synthesis, driver.tau().size(), lat,
                       job.search.rerank_window, isa);
      break;
    }
    case RunMode::OptimizationOnly: {
      rep.command = "optimize";
      rep.optimization = driver.optimize({});
      rep.optimization_proposals = driver.stats().proposals;
      best = pick_best(rep.optimization, driver.tau().size(), lat,
                       job.search.rerank_window, isa);
      break;
    }
  }

  rep.testcases = driver.tau().size();
  rep.stats = driver.stats();
  if (best) {
    rep.has_best = true;
    rep.best = *best;
    rep.outcome = best->validated == so::Validation::Proven
                      ? so::RunOutcome::Proven
                      : so::RunOutcome::Unverified;
  } else {
    rep.outcome = so::RunOutcome::NotFound;
  }

  if (g_interrupted.load())
    std::fprintf(stderr,
                 "interrupted: workers cancelled, reporting best-so-far\n");

  // Human summary.
  std::printf("job:        %s\n", rep.job.c_str());
  std::printf("command:    %s\n", rep.command.c_str());
  std::printf("target:     %zu active instructions, latency %llu\n",
              rep.target_active,
              static_cast<unsigned long long>(rep.target_latency));
  std::printf("testcases:  %zu\n", rep.testcases);
  std::printf("proposals:  synthesis %llu, optimization %llu\n",
              static_cast<unsigned long long>(rep.synthesis_proposals),
              static_cast<unsigned long long>(rep.optimization_proposals));
  std::printf("accepted:   %llu of %llu\n",
              static_cast<unsigned long long>(rep.stats.accepted),
              static_cast<unsigned long long>(rep.stats.proposals));
  std::printf("candidates: synthesis %zu, optimization %zu\n",
              rep.synthesis.size(), rep.optimization.size());
  std::printf("outcome:    %s\n", so::outcome_name(rep.outcome));
  if (rep.has_best) {
    std::printf("best:       latency %llu, %zu active (%s, found by %s/%d)\n",
                static_cast<unsigned long long>(rep.best.perf),
                rep.best.rewrite.active_count(),
                so::validation_name(rep.best.validated),
                rep.best.provenance.phase.c_str(), rep.best.provenance.worker);
    print_program_indented(rep.best.text);
    std::printf("overlap vs target: %.1f%%\n",
                so::overlap_diagnostic(rep.best.rewrite, spec.target));
    if (rep.best.perf > 0 && rep.target_latency > 0)
      std::printf("static speedup:    %.2fx\n",
                  static_cast<double>(rep.target_latency) /
                      static_cast<double>(rep.best.perf));
  }

  if (!trace_path.empty()) {
    trace.sort_canonical();
    trace.write_jsonl(trace_path);
    std::printf("trace:      %s (%zu records)\n", trace_path.c_str(),
                trace.records().size());
  }

  const std::string body = so::report_to_string(rep);
  if (!json_path.empty()) {
    write_file(json_path, body);
    std::printf("report:     %s\n", json_path.c_str());
  } else {
    std::printf("---\n%s", body.c_str());
  }
  return so::outcome_exit_code(rep.outcome);
}

// -----------------------------------------------------------------------
// testgen
// -----------------------------------------------------------------------

int cmd_testgen(so::JobConfig job, const std::string& out_path) {
  job.validate();
  const so::Isa& isa = so::Isa::instance();
  so::TargetSpec spec = job.make_spec(isa);
  std::vector<so::Testcase> suite = job.make_suite(spec, isa);
  std::string path = out_path.empty() ? job.name + "_testcases.json" : out_path;
  so::save_testcases(path, suite);

  std::printf("job:        %s\n", job.name.c_str());
  std::printf("testcases:  %zu (seed %llu)\n", suite.size(),
              static_cast<unsigned long long>(job.testcase_seed));
  std::string regs;
  for (so::Reg r : job.live_in_regs) {
    if (!regs.empty()) regs += ", ";
    regs += so::reg_name(r);
  }
  std::printf("live-in:    %s\n", regs.empty() ? "(none)" : regs.c_str());
  for (const so::RegAnnotation& a : spec.annotations)
    std::printf("  r%u in [%llu, %llu]\n", unsigned(a.reg),
                static_cast<unsigned long long>(a.lo),
                static_cast<unsigned long long>(a.hi));
  std::printf("wrote:      %s\n", path.c_str());
  return 0;
}

// -----------------------------------------------------------------------
// verify
// -----------------------------------------------------------------------

int cmd_verify(so::JobConfig job, const std::string& kernel,
               const std::string& rewrite_path,
               const std::string& rewrite_text, bool golden,
               const std::string& json_path) {
  job.validate();
  const so::Isa& isa = so::Isa::instance();
  so::TargetSpec spec = job.make_spec(isa);

  std::string text;
  std::string source;
  if (golden) {
    const so::BenchKernel* k = so::find_kernel(kernel);
    if (!k)
      throw std::runtime_error("--golden needs --kernel with a corpus name");
    text = k->golden_text;
    source = "golden";
  } else if (!rewrite_path.empty()) {
    text = read_file(rewrite_path);
    source = rewrite_path;
  } else if (!rewrite_text.empty()) {
    text = rewrite_text;
    source = "(inline)";
  } else {
    text = so::format_program(spec.target, isa);
    source = "target (self-check)";
  }

  so::Program rewrite = parse_loose(text, isa);
  so::VerifyVerdict v = so::verify_equivalence(rewrite, spec, job.verify, isa);

  std::printf("job:      %s\n", job.name.c_str());
  std::printf("rewrite:  %s (%zu active)\n", source.c_str(),
              rewrite.active_count());
  std::printf("verdict:  %s%s\n", so::verdict_name(v.result),
              v.exhaustive ? " (exhaustive sweep)" : "");
  std::printf("inputs:   %llu checked, %llu skipped (target faulted)\n",
              static_cast<unsigned long long>(v.inputs_checked),
              static_cast<unsigned long long>(v.inputs_skipped));
  if (!v.detail.empty()) std::printf("detail:   %s\n", v.detail.c_str());

  nlohmann::json j;
  j["schema"] = "stochopt-verify";
  j["version"] = 1;
  j["job"] = job.name;
  j["verdict"] = so::verdict_name(v.result);
  j["exhaustive"] = v.exhaustive;
  j["inputs_checked"] = v.inputs_checked;
  j["inputs_skipped"] = v.inputs_skipped;
  j["detail"] = v.detail;
  if (v.counterexample) {
    nlohmann::json suite = nlohmann::json::parse(
        so::testcases_to_json({*v.counterexample}));
    j["counterexample"] = suite["testcases"][0];
  } else {
    j["counterexample"] = nullptr;
  }
  std::string body = j.dump(2);
  body += "\n";
  if (!json_path.empty()) {
    write_file(json_path, body);
    std::printf("report:   %s\n", json_path.c_str());
  } else {
    std::printf("---\n%s", body.c_str());
  }

  switch (v.result) {
    case so::VerifyVerdict::Result::ProvenEqual:
      return 0;
    case so::VerifyVerdict::Result::Inconclusive:
      return 2;
    case so::VerifyVerdict::Result::Refuted:
      return 3;
  }
  return 1;
}

// -----------------------------------------------------------------------
// bench
// -----------------------------------------------------------------------

// Raw emulator throughput: target executions over the suite, ignoring all
// search machinery. This is the measured (non-deterministic) part of the
// bench output and never enters a canonical report.
double measure_execs_per_sec(const so::TargetSpec& spec,
                             const std::vector<so::Testcase>& tau,
                             const so::Isa& isa) {
  using clock = std::chrono::steady_clock;
  uint64_t execs = 0;
  volatile uint64_t sink = 0;
  const auto t0 = clock::now();
  double secs = 0.0;
  while (secs < 0.25) {
    for (const so::Testcase& tc : tau) {
      so::Outcome o = so::execute(spec.target, tc.input, &tc.legal, isa);
      sink = sink + o.state.regs[0];
      ++execs;
    }
    secs = std::chrono::duration<double>(clock::now() - t0).count();
  }
  (void)sink;
  return secs > 0.0 ? static_cast<double>(execs) / secs : 0.0;
}

int cmd_bench(const std::vector<std::string>& names, const Overrides& ov,
              const std::string& json_dir, bool quick) {
  const so::Isa& isa = so::Isa::instance();
  so::LatencyTable lat(isa);

  std::vector<const so::BenchKernel*> selected;
  if (names.empty()) {
    for (const so::BenchKernel& k : so::bench_corpus()) selected.push_back(&k);
  } else {
    for (const std::string& n : names) {
      const so::BenchKernel* k = so::find_kernel(n);
      if (!k) throw std::runtime_error("unknown kernel: " + n);
      selected.push_back(k);
    }
  }
  if (!json_dir.empty()) std::filesystem::create_directories(json_dir);

  std::printf("%-10s %-10s %9s %8s %9s %6s %12s\n", "kernel", "outcome",
              "H(target)", "H(found)", "H(golden)", "tests", "proposals");
  struct Measured {
    std::string name;
    double props_per_sec = 0.0;
    double evals_per_sec = 0.0;
    double emul_per_sec = 0.0;
  };
  std::vector<Measured> measured;

  for (const so::BenchKernel* k : selected) {
    so::JobConfig job = k->job;
    ov.apply(job);
    if (quick) {
      // Smoke budgets: exercise both phases without chasing a solution.
      job.search.synthesis_budget.proposals =
          std::min<uint64_t>(job.search.synthesis_budget.proposals, 20000);
      job.search.optimization_budget.proposals =
          std::min<uint64_t>(job.search.optimization_budget.proposals, 20000);
    }
    job.validate();
    so::TargetSpec spec = job.make_spec(isa);
    so::ProposalUniverse universe = job.make_universe(spec, isa);
    std::vector<so::Testcase> tau = job.make_suite(spec, isa);
    so::OracleVerifier verifier(spec, job.verify, isa);
    so::SearchDriver driver(spec, tau, universe, job.moves, job.cost, lat,
                            verifier, job.search_config(), isa);
    driver.set_cancel(&g_interrupted);

    const auto t0 = std::chrono::steady_clock::now();
    so::SearchDriver::PipelineOutput out = driver.run();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    so::ResultReport rep;
    rep.job = job.name;
    rep.command = "bench";
    rep.target_text = so::format_program(spec.target, isa);
    rep.target_latency = so::perf_estimate(spec.target, lat, isa);
    rep.target_active = spec.target.active_count();
    rep.synthesis = std::move(out.synthesis);
    rep.optimization = std::move(out.optimization);
    rep.synthesis_proposals = out.synthesis_proposals;
    rep.optimization_proposals = out.optimization_proposals;
    rep.testcases = driver.tau().size();
    rep.stats = driver.stats();
    if (out.best) {
      rep.has_best = true;
      rep.best = *out.best;
      rep.outcome = out.best->validated == so::Validation::Proven
                        ? so::RunOutcome::Proven
                        : so::RunOutcome::Unverified;
    }

    so::Program golden = parse_loose(k->golden_text, isa);
    const uint64_t h_golden = so::perf_estimate(golden, lat, isa);
    const uint64_t total_props =
        rep.synthesis_proposals + rep.optimization_proposals;

    char h_found[32];
    if (rep.has_best)
      std::snprintf(h_found, sizeof h_found, "%llu",
                    static_cast<unsigned long long>(rep.best.perf));
    else
      std::snprintf(h_found, sizeof h_found, "-");
    std::printf("%-10s %-10s %9llu %8s %9llu %6zu %12llu\n", k->name.c_str(),
                so::outcome_name(rep.outcome),
                static_cast<unsigned long long>(rep.target_latency), h_found,
                static_cast<unsigned long long>(h_golden), rep.testcases,
                static_cast<unsigned long long>(total_props));

    Measured m;
    m.name = k->name;
    m.props_per_sec =
        secs > 0.0 ? static_cast<double>(total_props) / secs : 0.0;
    m.evals_per_sec =
        secs > 0.0
            ? static_cast<double>(rep.stats.testcases_evaluated) / secs
            : 0.0;
    m.emul_per_sec = measure_execs_per_sec(spec, driver.tau(), isa);
    measured.push_back(m);

    if (!json_dir.empty()) {
      const std::string path = json_dir + "/" + k->name + ".json";
      write_file(path, so::report_to_string(rep));
    }
    if (g_interrupted.load()) {
      std::fprintf(stderr, "interrupted: stopping after %s\n",
                   k->name.c_str());
      break;
    }
  }

  // Wall-clock measurements; everything above this line is deterministic for
  // a fixed seed, everything below varies run to run.
  std::printf("\n%-10s %14s %14s %14s  (measured)\n", "kernel",
              "proposals/s", "tc-evals/s", "emul-execs/s");
  for (const Measured& m : measured)
    std::printf("%-10s %14.0f %14.0f %14.0f\n", m.name.c_str(),
                m.props_per_sec, m.evals_per_sec, m.emul_per_sec);
  if (!json_dir.empty()) std::printf("\nreports in %s/\n", json_dir.c_str());
  return 0;
}

// -----------------------------------------------------------------------
// stats: trace JSONL -> CSV series
// -----------------------------------------------------------------------

int cmd_stats(const std::string& trace_path, const std::string& out_dir,
              const std::string& reference_path) {
  const so::Isa& isa = so::Isa::instance();
  std::vector<so::TraceRecord> recs = so::read_trace_jsonl(trace_path);
  if (recs.empty()) throw std::runtime_error("trace is empty: " + trace_path);
  std::filesystem::create_directories(out_dir);

  // Reference for the overlap series: explicit file, else the best program
  // of the final record.
  so::Program reference;
  std::string ref_desc;
  if (!reference_path.empty()) {
    reference = parse_loose(read_file(reference_path), isa);
    ref_desc = reference_path;
  } else {
    reference = parse_loose(recs.back().best_text, isa);
    ref_desc = "final best";
  }

  const std::string costs_path = out_dir + "/cost_vs_proposals.csv";
  {
    std::ostringstream ss;
    ss << "phase,worker,proposal,current_total,best_total,eq_term,perf_term\n";
    for (const so::TraceRecord& r : recs)
      ss << r.phase << ',' << r.worker << ',' << r.proposal << ','
         << r.current_total << ',' << r.best_total << ',' << r.eq_term << ','
         << r.perf_term << '\n';
    write_file(costs_path, ss.str());
  }

  const std::string evals_path = out_dir + "/evals_vs_cost.csv";
  {
    std::ostringstream ss;
    ss << "phase,worker,proposal,current_total,testcases_last,"
          "testcases_evaluated\n";
    for (const so::TraceRecord& r : recs)
      ss << r.phase << ',' << r.worker << ',' << r.proposal << ','
         << r.current_total << ',' << r.testcases_last << ','
         << r.testcases_evaluated << '\n';
    write_file(evals_path, ss.str());
  }

  const std::string overlap_path = out_dir + "/overlap_vs_cost.csv";
  {
    std::ostringstream ss;
    ss << "phase,worker,proposal,current_total,overlap_pct\n";
    char buf[64];
    for (const so::TraceRecord& r : recs) {
      so::Program cur = parse_loose(r.current_text, isa);
      std::snprintf(buf, sizeof buf, "%.2f",
                    so::overlap_diagnostic(cur, reference));
      ss << r.phase << ',' << r.worker << ',' << r.proposal << ','
         << r.current_total << ',' << buf << '\n';
    }
    write_file(overlap_path, ss.str());
  }

  std::printf("trace:     %s (%zu records)\n", trace_path.c_str(),
              recs.size());
  std::printf("reference: %s\n", ref_desc.c_str());
  std::printf("wrote:     %s\n", costs_path.c_str());
  std::printf("wrote:     %s\n", evals_path.c_str());
  std::printf("wrote:     %s\n", overlap_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  CLI::App app{
      "stochopt: stochastic superoptimizer for a loop-free mini-ISA"};
  app.require_subcommand(1);

  std::string config_path, kernel, json_path, trace_path, out_path;
  uint64_t trace_every = 1024;
  Overrides ov;

  app.add_option("--config", config_path,
                 "job config JSON (default: $STOCHOPT_CONFIG)");

  CLI::App* c_testgen =
      app.add_subcommand("testgen", "generate a testcase suite");
  c_testgen->add_option("--kernel", kernel, "use a corpus kernel's job");
  c_testgen->add_option("--out", out_path,
                        "output path (default <job>_testcases.json)");
  add_override_flags(c_testgen, ov);

  auto add_search_command = [&](const char* name, const char* help) {
    CLI::App* c = app.add_subcommand(name, help);
    c->add_option("--kernel", kernel, "use a corpus kernel's job");
    c->add_option("--json", json_path,
                  "write the canonical report here instead of stdout");
    c->add_option("--trace", trace_path, "write a JSONL search trace");
    c->add_option("--trace-every", trace_every,
                  "proposals between trace samples");
    add_override_flags(c, ov);
    return c;
  };
  add_search_command("synthesize",
                     "synthesis phase only (correctness-driven search)");
  add_search_command("optimize",
                     "optimization phase only, starting from the target");
  add_search_command("run", "full pipeline: synthesize, optimize, rerank");

  CLI::App* c_verify =
      app.add_subcommand("verify", "check a rewrite against the target");
  std::string rewrite_path, rewrite_text;
  bool golden = false;
  c_verify->add_option("--kernel", kernel, "use a corpus kernel's job");
  c_verify->add_option("--rewrite", rewrite_path, "rewrite assembly file");
  c_verify->add_option("--rewrite-text", rewrite_text,
                       "rewrite assembly inline");
  c_verify->add_flag("--golden", golden, "verify the kernel's golden rewrite");
  c_verify->add_option("--json", json_path, "write the verdict report here");
  add_override_flags(c_verify, ov);

  CLI::App* c_bench = app.add_subcommand("bench", "run the kernel corpus");
  std::vector<std::string> bench_kernels;
  std::string json_dir;
  bool quick = false;
  c_bench->add_option("--kernel", bench_kernels,
                      "kernels to run (default: all)");
  c_bench->add_option("--json-dir", json_dir,
                      "write per-kernel canonical reports into this dir");
  c_bench->add_flag("--quick", quick, "cap budgets at 20k proposals per phase");
  add_override_flags(c_bench, ov);

  CLI::App* c_stats =
      app.add_subcommand("stats", "turn a search trace into CSV series");
  std::string stats_trace, stats_dir = ".", reference_path;
  c_stats->add_option("--trace", stats_trace, "trace JSONL from a search run")
      ->required();
  c_stats->add_option("--out-dir", stats_dir, "CSV output directory");
  c_stats->add_option("--reference", reference_path,
                      "overlap reference program (default: final best)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("testgen"))
      return cmd_testgen(
          [&] {
            so::JobConfig j = resolve_job(config_path, kernel);
            ov.apply(j);
            return j;
          }(),
          out_path);
    if (app.got_subcommand("synthesize") || app.got_subcommand("optimize") ||
        app.got_subcommand("run")) {
      so::JobConfig j = resolve_job(config_path, kernel);
      ov.apply(j);
      RunMode mode = app.got_subcommand("synthesize")
                         ? RunMode::SynthesisOnly
                         : app.got_subcommand("optimize")
                               ? RunMode::OptimizationOnly
                               : RunMode::Full;
      return run_search_command(std::move(j), mode, json_path, trace_path,
                                trace_every);
    }
    if (app.got_subcommand("verify")) {
      so::JobConfig j = resolve_job(config_path, kernel);
      ov.apply(j);
      return cmd_verify(std::move(j), kernel, rewrite_path, rewrite_text,
                        golden, json_path);
    }
    if (app.got_subcommand("bench")) return cmd_bench(bench_kernels, ov, json_dir, quick);
    if (app.got_subcommand("stats"))
      return cmd_stats(stats_trace, stats_dir, reference_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
