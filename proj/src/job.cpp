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

#include "stochopt/job.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stochopt/asm_text.hpp"

namespace stochopt {

using nlohmann::json;

std::string flags_names(uint8_t mask) {
  std::string s;
  auto app = [&](uint8_t f, const char* n) {
    if (mask & f) {
      if (!s.empty()) s += ',';
      s += n;
    }
  };
  app(kCF, "cf");
  app(kZF, "zf");
  app(kSF, "sf");
  app(kOF, "of");
  return s;
}

uint8_t parse_flag_name(const std::string& name) {
  if (name == "cf") return kCF;
  if (name == "zf") return kZF;
  if (name == "sf") return kSF;
  if (name == "of") return kOF;
  throw std::invalid_argument("unknown flag name: " + name);
}

void JobConfig::validate() const {
  if (target_text.empty())
    throw std::invalid_argument("job: target program is empty");
  if (capacity == 0 || capacity > 4096)
    throw std::invalid_argument("job: capacity out of range");
  if (live_out_regs.empty() && live_out_mem.empty() && live_out_flags == 0)
    throw std::invalid_argument("job: no live outputs declared");
  if (cost.improved_metric && cost.w_m < 1)
    throw std::invalid_argument(
        "job: relaxed register metric requires w_m >= 1");
  if (testcase_path.empty() && testcase_count == 0)
    throw std::invalid_argument("job: testcase count must be positive");
  if (verify.width_cap < 1 || verify.width_cap > 64)
    throw std::invalid_argument("job: verify width cap out of range");
  moves.validate();
  search.validate();
  for (const RegAnnotation& a : annotations) {
    if (a.lo > a.hi)
      throw std::invalid_argument("job: annotation with lo > hi");
    bool live = false;
    for (Reg r : live_in_regs) live |= r.index == a.reg;
    if (!live)
      throw std::invalid_argument("job: annotation on a non-live-in register");
  }
}

namespace {

// Instruction lines in an assembly listing: non-blank, not a comment, not a
// directive.
size_t count_instruction_lines(const std::string& text) {
  size_t count = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    if (line[begin] == '.') continue;
    ++count;
  }
  return count;
}

}  // namespace

TargetSpec JobConfig::make_spec(const Isa& isa) const {
  TargetSpec spec;
  // `capacity` is the rewrite slot count; a longer target keeps its natural
  // length so optimization can still start from it.
  size_t target_capacity = std::max(capacity, count_instruction_lines(target_text));
  spec.target = parse_program(target_text, target_capacity, isa);
  spec.live_in.regs = live_in_regs;
  spec.live_in.mem = live_in_mem;
  spec.live_out.regs = live_out_regs;
  spec.live_out.flags = live_out_flags;
  spec.live_out.mem = live_out_mem;
  spec.annotations = annotations;
  return spec;
}

SearchConfig JobConfig::search_config() const {
  SearchConfig cfg = search;
  if (cfg.rewrite_capacity == 0) cfg.rewrite_capacity = capacity;
  return cfg;
}

ProposalUniverse JobConfig::make_universe(const TargetSpec& spec,
                                          const Isa& isa) const {
  ProposalUniverse::Config cfg;
  for (const std::string& mn : universe_mnemonics) {
    const std::vector<uint16_t>* forms = isa.mnemonic_forms(mn);
    if (!forms)
      throw std::invalid_argument("job: unknown universe mnemonic: " + mn);
    for (uint16_t id : *forms) cfg.opcodes.push_back(id);
  }
  std::sort(cfg.opcodes.begin(), cfg.opcodes.end());
  cfg.opcodes.erase(std::unique(cfg.opcodes.begin(), cfg.opcodes.end()),
                    cfg.opcodes.end());
  for (const std::string& rn : universe_registers)
    cfg.registers.push_back(parse_reg_token(rn).index);
  cfg.constants = universe_constants;
  cfg.use_default_bag = universe_default_bag;
  cfg.mem_pool = universe_mem;
  ProposalUniverse u = ProposalUniverse::make(std::move(cfg), isa);
  u.absorb(spec.target);
  return u;
}

std::vector<Testcase> JobConfig::make_suite(const TargetSpec& spec,
                                            const Isa& isa) const {
  if (!testcase_path.empty()) return load_testcases(testcase_path);
  return generate_testcases(spec, testcase_count, testcase_seed, isa);
}

// ---------------------------------------------------------------------------
// JSON round trip
// ---------------------------------------------------------------------------

namespace {

json regs_to_json(const std::vector<Reg>& regs) {
  json a = json::array();
  for (Reg r : regs) a.push_back(reg_name(r));
  return a;
}

std::vector<Reg> regs_from_json(const json& a, const char* what) {
  if (!a.is_array())
    throw std::invalid_argument(std::string("job: ") + what +
                                " must be an array");
  std::vector<Reg> out;
  for (const json& v : a) out.push_back(parse_reg_token(v.get<std::string>()));
  return out;
}

json spans_to_json(const std::vector<MemSpan>& spans) {
  json a = json::array();
  for (const MemSpan& s : spans) a.push_back({s.addr, s.len});
  return a;
}

std::vector<MemSpan> spans_from_json(const json& a, const char* what) {
  if (!a.is_array())
    throw std::invalid_argument(std::string("job: ") + what +
                                " must be an array");
  std::vector<MemSpan> out;
  for (const json& v : a) {
    MemSpan s;
    s.addr = v.at(0).get<uint64_t>();
    s.len = v.at(1).get<uint32_t>();
    out.push_back(s);
  }
  return out;
}

json flags_to_json_list(uint8_t mask) {
  json a = json::array();
  if (mask & kCF) a.push_back("cf");
  if (mask & kZF) a.push_back("zf");
  if (mask & kSF) a.push_back("sf");
  if (mask & kOF) a.push_back("of");
  return a;
}

uint8_t flags_from_json_list(const json& a) {
  uint8_t mask = 0;
  for (const json& v : a) mask |= parse_flag_name(v.get<std::string>());
  return mask;
}

const char* strategy_name(VerifyConfig::Strategy s) {
  switch (s) {
    case VerifyConfig::Strategy::Exhaustive: return "exhaustive";
    case VerifyConfig::Strategy::Random: return "random";
    case VerifyConfig::Strategy::ExhaustiveThenRandom:
      return "exhaustive+random";
  }
  return "exhaustive+random";
}

VerifyConfig::Strategy strategy_from_name(const std::string& s) {
  if (s == "exhaustive") return VerifyConfig::Strategy::Exhaustive;
  if (s == "random") return VerifyConfig::Strategy::Random;
  if (s == "exhaustive+random")
    return VerifyConfig::Strategy::ExhaustiveThenRandom;
  throw std::invalid_argument("job: unknown verify strategy: " + s);
}

json mem_ref_to_json(const MemRef& m) {
  json j;
  j["base"] = reg_name(Reg{m.base, 64});
  j["disp"] = m.disp;
  if (m.index >= 0) {
    j["index"] = reg_name(Reg{static_cast<uint8_t>(m.index), 64});
    j["scale"] = m.scale;
  }
  return j;
}

MemRef mem_ref_from_json(const json& j) {
  MemRef m;
  m.base = parse_reg_token(j.at("base").get<std::string>()).index;
  m.disp = j.value("disp", int32_t{0});
  if (j.contains("index") && !j.at("index").is_null()) {
    m.index =
        static_cast<int8_t>(parse_reg_token(j.at("index").get<std::string>())
                                .index);
    m.scale = j.value("scale", uint8_t{1});
  }
  return m;
}

}  // namespace

json job_to_json(const JobConfig& job) {
  json j;
  j["schema"] = "stochopt-job";
  j["version"] = 1;
  j["name"] = job.name;
  j["target"] = job.target_text;
  j["capacity"] = job.capacity;

  json live;
  live["in_regs"] = regs_to_json(job.live_in_regs);
  live["in_mem"] = spans_to_json(job.live_in_mem);
  live["out_regs"] = regs_to_json(job.live_out_regs);
  live["out_flags"] = flags_to_json_list(job.live_out_flags);
  live["out_mem"] = spans_to_json(job.live_out_mem);
  j["live"] = live;

  json anns = json::array();
  for (const RegAnnotation& a : job.annotations)
    anns.push_back({{"reg", reg_name(Reg{a.reg, 64})},
                    {"lo", a.lo},
                    {"hi", a.hi}});
  j["annotations"] = anns;

  json tc;
  if (!job.testcase_path.empty()) tc["path"] = job.testcase_path;
  tc["count"] = job.testcase_count;
  tc["seed"] = job.testcase_seed;
  j["testcases"] = tc;

  j["cost"] = {{"w_sf", job.cost.w_sf},
               {"w_fp", job.cost.w_fp},
               {"w_ur", job.cost.w_ur},
               {"w_m", job.cost.w_m},
               {"improved_metric", job.cost.improved_metric}};
  j["moves"] = {{"p_c", job.moves.p_c}, {"p_o", job.moves.p_o},
                {"p_s", job.moves.p_s}, {"p_i", job.moves.p_i},
                {"p_u", job.moves.p_u}, {"beta", job.moves.beta}};
  j["search"] = {{"synthesis_workers", job.search.synthesis_workers},
                 {"optimization_workers", job.search.optimization_workers},
                 {"synthesis_proposals", job.search.synthesis_budget.proposals},
                 {"synthesis_wall_ms", job.search.synthesis_budget.wall_ms},
                 {"optimization_proposals",
                  job.search.optimization_budget.proposals},
                 {"optimization_wall_ms",
                  job.search.optimization_budget.wall_ms},
                 {"rerank_window", job.search.rerank_window},
                 {"master_seed", job.search.master_seed},
                 {"epoch", job.search.epoch},
                 {"max_testcases", job.search.max_testcases},
                 {"keep_candidates", job.search.keep_candidates}};
  j["verify"] = {{"strategy", strategy_name(job.verify.strategy)},
                 {"width_cap", job.verify.width_cap},
                 {"input_budget", job.verify.input_budget},
                 {"random_trials", job.verify.random_trials},
                 {"random_seed", job.verify.random_seed}};

  json uni;
  uni["opcodes"] = job.universe_mnemonics;
  uni["registers"] = job.universe_registers;
  uni["constants"] = job.universe_constants;
  uni["use_default_bag"] = job.universe_default_bag;
  json mem = json::array();
  for (const MemRef& m : job.universe_mem) mem.push_back(mem_ref_to_json(m));
  uni["mem"] = mem;
  j["universe"] = uni;
  return j;
}

JobConfig job_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("job: not a JSON object");
  if (j.value("schema", "stochopt-job") != "stochopt-job")
    throw std::invalid_argument("job: wrong schema tag");
  int version = j.value("version", 1);
  if (version > 1)
    throw std::invalid_argument(
        "job: config version " + std::to_string(version) +
        " is newer than this build understands (max 1)");

  JobConfig job;
  job.name = j.value("name", std::string("job"));
  job.target_text = j.value("target", std::string());
  job.capacity = j.value("capacity", size_t{50});

  if (j.contains("live")) {
    const json& live = j.at("live");
    if (live.contains("in_regs"))
      job.live_in_regs = regs_from_json(live.at("in_regs"), "live.in_regs");
    if (live.contains("in_mem"))
      job.live_in_mem = spans_from_json(live.at("in_mem"), "live.in_mem");
    if (live.contains("out_regs"))
      job.live_out_regs = regs_from_json(live.at("out_regs"), "live.out_regs");
    if (live.contains("out_flags"))
      job.live_out_flags = flags_from_json_list(live.at("out_flags"));
    if (live.contains("out_mem"))
      job.live_out_mem = spans_from_json(live.at("out_mem"), "live.out_mem");
  }

  if (j.contains("annotations")) {
    for (const json& a : j.at("annotations")) {
      RegAnnotation ann;
      ann.reg = parse_reg_token(a.at("reg").get<std::string>()).index;
      ann.lo = a.at("lo").get<uint64_t>();
      ann.hi = a.at("hi").get<uint64_t>();
      job.annotations.push_back(ann);
    }
  }

  if (j.contains("testcases")) {
    const json& tc = j.at("testcases");
    job.testcase_path = tc.value("path", std::string());
    job.testcase_count = tc.value("count", size_t{32});
    job.testcase_seed = tc.value("seed", uint64_t{1});
  }

  if (j.contains("cost")) {
    const json& c = j.at("cost");
    job.cost.w_sf = c.value("w_sf", job.cost.w_sf);
    job.cost.w_fp = c.value("w_fp", job.cost.w_fp);
    job.cost.w_ur = c.value("w_ur", job.cost.w_ur);
    job.cost.w_m = c.value("w_m", job.cost.w_m);
    job.cost.improved_metric =
        c.value("improved_metric", job.cost.improved_metric);
  }
  if (j.contains("moves")) {
    const json& m = j.at("moves");
    job.moves.p_c = m.value("p_c", job.moves.p_c);
    job.moves.p_o = m.value("p_o", job.moves.p_o);
    job.moves.p_s = m.value("p_s", job.moves.p_s);
    job.moves.p_i = m.value("p_i", job.moves.p_i);
    job.moves.p_u = m.value("p_u", job.moves.p_u);
    job.moves.beta = m.value("beta", job.moves.beta);
  }
  if (j.contains("search")) {
    const json& s = j.at("search");
    job.search.synthesis_workers =
        s.value("synthesis_workers", job.search.synthesis_workers);
    job.search.optimization_workers =
        s.value("optimization_workers", job.search.optimization_workers);
    job.search.synthesis_budget.proposals = s.value(
        "synthesis_proposals", job.search.synthesis_budget.proposals);
    job.search.synthesis_budget.wall_ms =
        s.value("synthesis_wall_ms", job.search.synthesis_budget.wall_ms);
    job.search.optimization_budget.proposals = s.value(
        "optimization_proposals", job.search.optimization_budget.proposals);
    job.search.optimization_budget.wall_ms = s.value(
        "optimization_wall_ms", job.search.optimization_budget.wall_ms);
    job.search.rerank_window =
        s.value("rerank_window", job.search.rerank_window);
    job.search.master_seed = s.value("master_seed", job.search.master_seed);
    job.search.epoch = s.value("epoch", job.search.epoch);
    job.search.max_testcases =
        s.value("max_testcases", job.search.max_testcases);
    job.search.keep_candidates =
        s.value("keep_candidates", job.search.keep_candidates);
  }
  if (j.contains("verify")) {
    const json& v = j.at("verify");
    if (v.contains("strategy"))
      job.verify.strategy =
          strategy_from_name(v.at("strategy").get<std::string>());
    job.verify.width_cap = v.value("width_cap", job.verify.width_cap);
    job.verify.input_budget = v.value("input_budget", job.verify.input_budget);
    job.verify.random_trials =
        v.value("random_trials", job.verify.random_trials);
    job.verify.random_seed = v.value("random_seed", job.verify.random_seed);
  }
  if (j.contains("universe")) {
    const json& u = j.at("universe");
    job.universe_mnemonics =
        u.value("opcodes", std::vector<std::string>());
    job.universe_registers =
        u.value("registers", std::vector<std::string>());
    job.universe_constants =
        u.value("constants", std::vector<uint64_t>());
    job.universe_default_bag =
        u.value("use_default_bag", job.universe_default_bag);
    if (u.contains("mem"))
      for (const json& m : u.at("mem"))
        job.universe_mem.push_back(mem_ref_from_json(m));
  }
  return job;
}

JobConfig load_job(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("job: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("job: " + path + ": " + e.what());
  }
  return job_from_json(j);
}

void save_job(const JobConfig& job, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("job: cannot open " + path);
  out << job_to_json(job).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Result reports
// ---------------------------------------------------------------------------

const char* outcome_name(RunOutcome o) {
  switch (o) {
    case RunOutcome::Proven: return "proven";
    case RunOutcome::Unverified: return "unverified";
    case RunOutcome::NotFound: return "not_found";
  }
  return "not_found";
}

int outcome_exit_code(RunOutcome o) {
  switch (o) {
    case RunOutcome::Proven: return 0;
    case RunOutcome::Unverified: return 2;
    case RunOutcome::NotFound: return 3;
  }
  return 3;
}

namespace {

json result_to_json(const SearchResult& r) {
  json j;
  j["text"] = r.text;
  j["eq_term"] = r.cost.eq_term;
  j["perf_term"] = r.cost.perf_term;
  j["total"] = r.cost.total;
  j["validated"] = validation_name(r.validated);
  j["static_latency"] = r.perf;
  j["active_length"] = r.rewrite.active_count();
  j["provenance"] = {{"phase", r.provenance.phase},
                     {"worker", r.provenance.worker},
                     {"seed", r.provenance.seed},
                     {"proposals", r.provenance.proposals}};
  return j;
}

json stats_to_json(const ChainStats& s) {
  static const char* kKind[4] = {"opcode", "operand", "swap", "instruction"};
  json proposed, accepted;
  for (size_t i = 0; i < 4; ++i) {
    proposed[kKind[i]] = s.proposed_by_kind[i];
    accepted[kKind[i]] = s.accepted_by_kind[i];
  }
  return {{"proposals", s.proposals},
          {"accepted", s.accepted},
          {"proposed_by_kind", proposed},
          {"accepted_by_kind", accepted},
          {"testcases_evaluated", s.testcases_evaluated},
          {"early_stops", s.early_stops},
          {"refinements", s.refinements},
          {"verifier_errors", s.verifier_errors}};
}

}  // namespace

json report_to_json(const ResultReport& r) {
  json j;
  j["schema"] = "stochopt-result";
  j["version"] = 1;
  j["job"] = r.job;
  j["command"] = r.command;
  j["outcome"] = outcome_name(r.outcome);
  j["best"] = r.has_best ? result_to_json(r.best) : json(nullptr);
  j["target"] = {{"text", r.target_text},
                 {"static_latency", r.target_latency},
                 {"active_length", r.target_active}};
  j["testcases"] = r.testcases;
  j["proposals"] = {{"synthesis", r.synthesis_proposals},
                    {"optimization", r.optimization_proposals}};
  json synth = json::array(), opt = json::array();
  for (const SearchResult& s : r.synthesis) synth.push_back(result_to_json(s));
  for (const SearchResult& s : r.optimization) opt.push_back(result_to_json(s));
  j["candidates"] = {{"synthesis", synth}, {"optimization", opt}};
  j["stats"] = stats_to_json(r.stats);
  return j;
}

std::string report_to_string(const ResultReport& r) {
  // nlohmann objects iterate in key order, so the dump is canonical.
  return report_to_json(r).dump(2) + "\n";
}

}  // namespace stochopt
