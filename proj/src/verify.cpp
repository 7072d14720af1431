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

#include "stochopt/verify.hpp"

#include <algorithm>

#include "stochopt/asm_text.hpp"
#include "stochopt/rng.hpp"

namespace stochopt {

const char* verdict_name(VerifyVerdict::Result r) {
  switch (r) {
    case VerifyVerdict::Result::ProvenEqual: return "proven-equal";
    case VerifyVerdict::Result::Refuted: return "refuted";
    case VerifyVerdict::Result::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// One enumerated input dimension.
struct Dim {
  bool is_mem = false;
  Reg reg;            // when !is_mem
  uint64_t addr = 0;  // when is_mem
  uint64_t base = 0;  // first value
  uint64_t count = 0; // number of values
};

std::vector<Dim> enumeration_dims(const TargetSpec& spec,
                                  const VerifyConfig& cfg) {
  std::vector<Dim> dims;
  for (Reg r : spec.live_in.regs) {
    Dim d;
    d.reg = r;
    if (const RegAnnotation* a = spec.annotation_for(r.index)) {
      d.base = a->lo;
      d.count = a->hi - a->lo + 1;
    } else {
      uint8_t eff = std::min<uint8_t>(r.bits, cfg.width_cap);
      d.base = 0;
      d.count = eff >= 64 ? 0 : (1ull << eff);  // 0 encodes 2^64
    }
    dims.push_back(d);
  }
  for (const auto& span : spec.live_in.mem) {
    for (uint64_t i = 0; i < span.len; ++i) {
      Dim d;
      d.is_mem = true;
      d.addr = span.addr + i;
      uint8_t eff = std::min<uint8_t>(8, cfg.width_cap);
      d.base = 0;
      d.count = 1ull << eff;
      dims.push_back(d);
    }
  }
  return dims;
}

// Total combinations, saturating at 2^64-1.
uint64_t combination_count(const std::vector<Dim>& dims) {
  unsigned __int128 total = 1;
  for (const auto& d : dims) {
    unsigned __int128 c =
        d.count == 0 ? (static_cast<unsigned __int128>(1) << 64) : d.count;
    total *= c;
    if (total > ~static_cast<uint64_t>(0)) return ~static_cast<uint64_t>(0);
  }
  return static_cast<uint64_t>(total);
}

bool spec_touches_memory(const TargetSpec& spec) {
  if (!spec.live_in.mem.empty() || !spec.live_out.mem.empty()) return true;
  for (const auto& ins : spec.target.slots) {
    if (ins.unused()) continue;
    for (int i = 0; i < ins.nops; ++i)
      if (ins.ops[static_cast<size_t>(i)].kind == OperandKind::Mem)
        return true;
  }
  return false;
}

struct ComparePlan {
  bool memory_involved = false;
  AddrSet fixed_legal;  // reused when no memory is involved (empty set)
};

// Runs both programs on one input and reports whether they diverge. The
// expectation side reuses the testcase projection so verification and the
// cost function share one notion of equality.
bool inputs_diverge(const Program& rewrite, const TargetSpec& spec,
                    const ComparePlan& plan, const MachineState& input,
                    bool* target_faulted, const Isa& isa) {
  // Legal set: what the target touches on this input plus declared spans.
  AddrSet legal;
  const AddrSet* legal_ptr = &plan.fixed_legal;
  if (plan.memory_involved) {
    legal = record_trace(spec.target, input, isa);
    for (const auto& span : spec.live_in.mem)
      legal.add_span(span.addr, span.len);
    for (const auto& span : spec.live_out.mem)
      legal.add_span(span.addr, span.len);
    legal_ptr = &legal;
  }

  Outcome tgt = execute(spec.target, input, legal_ptr, isa);
  if (tgt.sigsegv + tgt.sigfloat + tgt.undef != 0) {
    *target_faulted = true;
    return false;
  }
  *target_faulted = false;

  Outcome got = execute(rewrite, input, legal_ptr, isa);
  if (got.sigsegv + got.sigfloat + got.undef != 0) return true;

  ExpectedOut want = project_expected(spec, tgt.state);
  for (const auto& rv : want.regs) {
    if (reg_mismatch_bits(rv, got.state, rv.reg) != 0) return true;
  }
  if (flag_distance(want, got.state) != 0) return true;
  if (mem_distance(want, got.state) != 0) return true;
  return false;
}

}  // namespace

VerifyVerdict verify_equivalence(const Program& rewrite,
                                 const TargetSpec& spec,
                                 const VerifyConfig& cfg, const Isa& isa) {
  VerifyVerdict verdict;
  ComparePlan plan;
  plan.memory_involved = spec_touches_memory(spec) ||
                         [&] {
                           for (const auto& ins : rewrite.slots) {
                             if (ins.unused()) continue;
                             for (int i = 0; i < ins.nops; ++i)
                               if (ins.ops[static_cast<size_t>(i)].kind ==
                                   OperandKind::Mem)
                                 return true;
                           }
                           return false;
                         }();

  const bool want_exhaustive =
      cfg.strategy != VerifyConfig::Strategy::Random;
  const bool want_random =
      cfg.strategy != VerifyConfig::Strategy::Exhaustive;

  if (want_exhaustive) {
    std::vector<Dim> dims = enumeration_dims(spec, cfg);
    uint64_t total = combination_count(dims);
    if (total > cfg.input_budget) {
      if (!want_random)
        throw VerifyError(
            "exhaustive verification infeasible: " + std::to_string(total) +
            " input combinations exceed the budget of " +
            std::to_string(cfg.input_budget));
      verdict.detail = "enumeration over budget, fell back to random";
    } else {
      std::vector<uint64_t> odo(dims.size(), 0);
      MachineState input;
      for (uint64_t n = 0; n < total; ++n) {
        input = MachineState();
        for (size_t i = 0; i < dims.size(); ++i) {
          const Dim& d = dims[i];
          uint64_t v = d.base + odo[i];
          if (d.is_mem)
            input.write_byte(d.addr, static_cast<uint8_t>(v));
          else
            input.write_reg(d.reg, v);
        }
        bool target_faulted = false;
        if (inputs_diverge(rewrite, spec, plan, input, &target_faulted,
                           isa)) {
          verdict.result = VerifyVerdict::Result::Refuted;
          verdict.counterexample = testcase_from_input(spec, input, isa);
          verdict.inputs_checked = n + 1;
          verdict.detail = "divergence during exhaustive enumeration";
          return verdict;
        }
        if (target_faulted) ++verdict.inputs_skipped;
        ++verdict.inputs_checked;
        for (size_t i = dims.size(); i-- > 0;) {
          if (++odo[i] < dims[i].count) break;
          odo[i] = 0;
        }
      }
      verdict.result = VerifyVerdict::Result::ProvenEqual;
      verdict.exhaustive = true;
      bool reduced = false;
      for (Reg r : spec.live_in.regs)
        if (spec.annotation_for(r.index) == nullptr && cfg.width_cap < r.bits)
          reduced = true;
      if (cfg.width_cap < 8 && !spec.live_in.mem.empty()) reduced = true;
      verdict.detail = reduced
                           ? "exhaustive over the width-capped input domain"
                           : "exhaustive over the full input domain";
      return verdict;
    }
  }

  if (want_random) {
    Rng rng(cfg.random_seed);
    for (uint64_t n = 0; n < cfg.random_trials; ++n) {
      MachineState input;
      for (Reg r : spec.live_in.regs) {
        uint64_t v;
        if (const RegAnnotation* a = spec.annotation_for(r.index))
          v = a->lo + rng.below(a->hi - a->lo + 1);
        else
          v = rng.next() & width_mask(r.bits);
        input.write_reg(r, v);
      }
      for (const auto& span : spec.live_in.mem)
        for (uint64_t i = 0; i < span.len; ++i)
          input.write_byte(span.addr + i,
                           static_cast<uint8_t>(rng.next() & 0xff));
      bool target_faulted = false;
      if (inputs_diverge(rewrite, spec, plan, input, &target_faulted, isa)) {
        verdict.result = VerifyVerdict::Result::Refuted;
        verdict.counterexample = testcase_from_input(spec, input, isa);
        verdict.inputs_checked += n + 1;
        verdict.detail = "divergence during random sampling";
        return verdict;
      }
      if (target_faulted) ++verdict.inputs_skipped;
    }
    verdict.inputs_checked += cfg.random_trials;
    verdict.result = VerifyVerdict::Result::Inconclusive;
    if (verdict.detail.empty())
      verdict.detail = "random sampling found no divergence";
    return verdict;
  }

  return verdict;
}

OracleVerifier::OracleVerifier(const TargetSpec& spec, VerifyConfig cfg,
                               const Isa& isa)
    : spec_(&spec), cfg_(cfg), isa_(&isa) {}

VerifierAnswer OracleVerifier::classify(const Program& rewrite) {
  std::string key = format_program(rewrite, *isa_);
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++cache_hits_;
      return it->second;
    }
  }

  VerifierAnswer answer;
  try {
    VerifyVerdict v = verify_equivalence(rewrite, *spec_, cfg_, *isa_);
    switch (v.result) {
      case VerifyVerdict::Result::ProvenEqual:
        answer.kind = VerifierAnswer::Kind::Proven;
        break;
      case VerifyVerdict::Result::Refuted:
        answer.kind = VerifierAnswer::Kind::Refuted;
        answer.cex = std::move(v.counterexample);
        break;
      case VerifyVerdict::Result::Inconclusive:
        answer.kind = VerifierAnswer::Kind::Unverified;
        break;
    }
  } catch (const VerifyError& e) {
    answer.kind = VerifierAnswer::Kind::Error;
    answer.error = e.what();
  }

  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(std::move(key), answer);
  return answer;
}

VerifyVerdict OracleVerifier::verdict(const Program& rewrite) {
  return verify_equivalence(rewrite, *spec_, cfg_, *isa_);
}

}  // namespace stochopt
