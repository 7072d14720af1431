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

#ifndef STOCHOPT_COST_HPP
#define STOCHOPT_COST_HPP

#include <bit>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stochopt/isa.hpp"
#include "stochopt/machine.hpp"
#include "stochopt/testgen.hpp"

namespace stochopt {

// ---------------------------------------------------------------------------
// Cost model: cost(R) = eq(R) [+ perf(R) in optimization mode].
//
// eq is approximated on a testcase suite as a bitwise Hamming distance between
// the candidate's live-out state and the target's, plus weighted fault
// counts. When the approximation reaches zero the verifier is consulted; a
// refutation yields cost 1 plus a fresh counterexample testcase.
// ---------------------------------------------------------------------------

struct CostParams {
  uint64_t w_sf = 1;  // weight per illegal dereference
  uint64_t w_fp = 1;  // weight per arithmetic fault
  uint64_t w_ur = 2;  // weight per undefined-source read
  uint64_t w_m = 3;   // misplacement penalty of the relaxed register metric
  // Relaxed register metric: score each live-out register as the minimum over
  // all same-width registers of (bit distance + w_m if it is not the expected
  // register). Requires w_m >= 1 so a zero score still implies an exact match
  // in the right place. The strict metric charges the expected register only.
  bool improved_metric = true;
};

enum class CostMode { Synthesis, Optimization };

enum class Validation : uint8_t { NotAttempted, Proven, Refuted, Unverified };

const char* validation_name(Validation v);

struct CostReport {
  uint64_t eq_term = 0;    // equality estimate (error weights included)
  uint64_t perf_term = 0;  // static latency estimate; zero in synthesis mode
  uint64_t err_term = 0;   // fault portion of eq_term, for diagnostics
  uint64_t total = 0;      // eq_term + perf_term
  Validation validated = Validation::NotAttempted;
};

// What the verifier tells the cost function about a zero-estimate candidate.
struct VerifierAnswer {
  enum class Kind { Proven, Refuted, Unverified, Error };
  Kind kind = Kind::Unverified;
  std::optional<Testcase> cex;  // present when Refuted
  std::string error;            // present when Error
};

class VerifierClient {
 public:
  virtual ~VerifierClient() = default;
  virtual VerifierAnswer classify(const Program& rewrite) = 0;
};

// Bit distance between two words.
inline uint64_t pop_distance(uint64_t a, uint64_t b) {
  return static_cast<uint64_t>(std::popcount(a ^ b));
}

// Mismatch mask of one expected register against an arbitrary actual
// register view: a bit counts when the values differ or exactly one side is
// defined. Both views must share a width.
uint64_t reg_mismatch_bits(const ExpectedOut::RegVal& want,
                           const MachineState& got, Reg actual);

// Strict metric: distance to the expected register only.
uint64_t reg_distance_strict(const ExpectedOut::RegVal& want,
                             const MachineState& got);

// Relaxed metric: min over same-width registers, plus w_m when the best match
// sits in the wrong register.
uint64_t reg_distance_improved(const ExpectedOut::RegVal& want,
                               const MachineState& got, uint64_t w_m);

// Live-out memory distance (bitwise; a byte whose definedness disagrees
// counts all 8 bits). Both metrics treat memory strictly.
uint64_t mem_distance(const ExpectedOut& want, const MachineState& got);

// Live-out flag distance: one unit per flag whose value or definedness
// disagrees.
uint64_t flag_distance(const ExpectedOut& want, const MachineState& got);

inline uint64_t err_term(const CostParams& p, uint64_t sigsegv,
                         uint64_t sigfloat, uint64_t undef) {
  return p.w_sf * sigsegv + p.w_fp * sigfloat + p.w_ur * undef;
}

// Full equality distance of one candidate run on one testcase.
uint64_t testcase_cost(const Program& rewrite, const Testcase& tc,
                       const CostParams& params, uint64_t* err_out = nullptr,
                       const Isa& isa = Isa::instance());

// Testcase approximation of eq: sum of testcase_cost over the suite. Zero iff
// the candidate matches the target's live-out behaviour (values, definedness,
// flags, memory) without faults on every testcase.
uint64_t eq_prime(const Program& rewrite, const std::vector<Testcase>& tau,
                  const CostParams& params, const Isa& isa = Isa::instance());

// Static performance estimate: sum of opcode latencies over active slots.
uint64_t perf_estimate(const Program& p, const LatencyTable& lat,
                       const Isa& isa = Isa::instance());

struct EvalContext {
  CostParams params;
  CostMode mode = CostMode::Synthesis;
  const LatencyTable* latencies = nullptr;  // required in optimization mode
  VerifierClient* verifier = nullptr;       // nullptr: zero estimates stay
                                            // Unverified, nothing escalates
};

struct EvalResult {
  CostReport report;
  size_t testcases_used = 0;
  bool completed = false;       // false: stopped early, running sum hit bound
  bool verifier_error = false;  // verifier failed; callers must reject
  std::optional<Testcase> cex;  // fresh counterexample from a refutation
};

// Evaluates cost with early termination: testcase costs accumulate in suite
// order (optimization mode starts from the perf term) and evaluation stops as
// soon as the running sum reaches `bound`, since the final total could only
// be larger. With bound = +infinity this is the plain full evaluation. The
// accept/reject decision "total < bound" is identical between the bounded and
// full evaluations by construction.
//
// Escalation: when every testcase passes (equality estimate zero) and a
// verifier is present, the candidate is classified. Refuted candidates get
// eq_term = 1 and carry the counterexample out for suite refinement.
EvalResult evaluate_cost(
    const Program& rewrite, const std::vector<Testcase>& tau,
    const EvalContext& ctx,
    double bound = std::numeric_limits<double>::infinity(),
    const Isa& isa = Isa::instance());

}  // namespace stochopt

#endif  // STOCHOPT_COST_HPP
