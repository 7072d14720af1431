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

#include "stochopt/cost.hpp"

namespace stochopt {

const char* validation_name(Validation v) {
  switch (v) {
    case Validation::NotAttempted: return "not-attempted";
    case Validation::Proven: return "proven";
    case Validation::Refuted: return "refuted";
    case Validation::Unverified: return "unverified";
  }
  return "?";
}

uint64_t reg_mismatch_bits(const ExpectedOut::RegVal& want,
                           const MachineState& got, Reg actual) {
  uint64_t mask = width_mask(want.reg.bits);
  uint64_t va = got.read_reg(actual);
  uint64_t da = got.read_reg_defined(actual);
  return ((want.value ^ va) | (want.defined ^ da)) & mask;
}

uint64_t reg_distance_strict(const ExpectedOut::RegVal& want,
                             const MachineState& got) {
  return static_cast<uint64_t>(
      std::popcount(reg_mismatch_bits(want, got, want.reg)));
}

uint64_t reg_distance_improved(const ExpectedOut::RegVal& want,
                               const MachineState& got, uint64_t w_m) {
  uint64_t best = reg_distance_strict(want, got);
  for (uint8_t i = 0; i < kNumRegs; ++i) {
    if (i == want.reg.index) continue;
    Reg candidate{i, want.reg.bits};
    uint64_t d = static_cast<uint64_t>(
                     std::popcount(reg_mismatch_bits(want, got, candidate))) +
                 w_m;
    if (d < best) best = d;
  }
  return best;
}

uint64_t mem_distance(const ExpectedOut& want, const MachineState& got) {
  uint64_t sum = 0;
  for (const auto& mb : want.mem) {
    bool da = got.byte_defined(mb.addr);
    if (da != mb.defined) {
      sum += 8;
    } else if (mb.defined) {
      sum += static_cast<uint64_t>(
          std::popcount(static_cast<unsigned>(mb.value ^ got.read_byte(mb.addr))));
    }
  }
  return sum;
}

uint64_t flag_distance(const ExpectedOut& want, const MachineState& got) {
  uint64_t sum = 0;
  const uint8_t bits[] = {kCF, kZF, kSF, kOF};
  for (uint8_t b : bits) {
    if (!(want.flags_live & b)) continue;
    bool ve = (want.flags & b) != 0;
    bool de = (want.flags_defined & b) != 0;
    bool va = got.flag_value(b);
    bool da = got.flag_defined(b);
    if (ve != va || de != da) ++sum;
  }
  return sum;
}

uint64_t testcase_cost(const Program& rewrite, const Testcase& tc,
                       const CostParams& params, uint64_t* err_out,
                       const Isa& isa) {
  Outcome out = execute(rewrite, tc.input, &tc.legal, isa);
  uint64_t sum = 0;
  for (const auto& rv : tc.expected.regs)
    sum += params.improved_metric
               ? reg_distance_improved(rv, out.state, params.w_m)
               : reg_distance_strict(rv, out.state);
  sum += mem_distance(tc.expected, out.state);
  sum += flag_distance(tc.expected, out.state);
  uint64_t err = err_term(params, out.sigsegv, out.sigfloat, out.undef);
  if (err_out != nullptr) *err_out += err;
  return sum + err;
}

uint64_t eq_prime(const Program& rewrite, const std::vector<Testcase>& tau,
                  const CostParams& params, const Isa& isa) {
  uint64_t sum = 0;
  for (const auto& tc : tau) sum += testcase_cost(rewrite, tc, params, nullptr, isa);
  return sum;
}

uint64_t perf_estimate(const Program& p, const LatencyTable& lat,
                       const Isa& isa) {
  (void)isa;
  uint64_t sum = 0;
  for (const auto& ins : p.slots)
    if (!ins.unused()) sum += lat.latency(ins.op);
  return sum;
}

EvalResult evaluate_cost(const Program& rewrite,
                         const std::vector<Testcase>& tau,
                         const EvalContext& ctx, double bound,
                         const Isa& isa) {
  EvalResult res;
  uint64_t running = 0;
  if (ctx.mode == CostMode::Optimization) {
    res.report.perf_term = perf_estimate(rewrite, *ctx.latencies, isa);
    running = res.report.perf_term;
    if (static_cast<double>(running) >= bound) {
      res.report.total = running;
      return res;  // rejected before touching a single testcase
    }
  }

  uint64_t eq_sum = 0;
  uint64_t err_sum = 0;
  for (const auto& tc : tau) {
    eq_sum += testcase_cost(rewrite, tc, ctx.params, &err_sum, isa);
    ++res.testcases_used;
    running = res.report.perf_term + eq_sum;
    if (static_cast<double>(running) >= bound) {
      res.report.eq_term = eq_sum;
      res.report.err_term = err_sum;
      res.report.total = running;
      return res;  // early termination: total can only grow
    }
  }
  res.completed = true;
  res.report.eq_term = eq_sum;
  res.report.err_term = err_sum;

  if (eq_sum == 0 && ctx.verifier != nullptr) {
    VerifierAnswer answer = ctx.verifier->classify(rewrite);
    switch (answer.kind) {
      case VerifierAnswer::Kind::Proven:
        res.report.validated = Validation::Proven;
        break;
      case VerifierAnswer::Kind::Unverified:
        res.report.validated = Validation::Unverified;
        break;
      case VerifierAnswer::Kind::Refuted:
        res.report.validated = Validation::Refuted;
        res.report.eq_term = 1;
        res.cex = std::move(answer.cex);
        break;
      case VerifierAnswer::Kind::Error:
        res.verifier_error = true;
        break;
    }
  }
  res.report.total = res.report.eq_term + res.report.perf_term;
  return res;
}

}  // namespace stochopt
