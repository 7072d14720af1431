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

#ifndef STOCHOPT_VERIFY_HPP
#define STOCHOPT_VERIFY_HPP

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "stochopt/cost.hpp"
#include "stochopt/testgen.hpp"

namespace stochopt {

// ---------------------------------------------------------------------------
// Equivalence checking by input enumeration.
//
// The exhaustive strategy enumerates every live-in value combination with
// each input reduced to width_cap bits (annotated registers enumerate their
// annotation range instead; live-in memory bytes enumerate all 256 values,
// or fewer under a smaller cap). A clean sweep is reported as proven-equal:
// the guarantee is exact over that reduced-width domain, and extends to the
// full width only when width_cap covers the declared widths.
//
// The random strategy samples full-width inputs; it can refute but never
// prove, so a clean run is inconclusive.
// ---------------------------------------------------------------------------

struct VerifyConfig {
  enum class Strategy { Exhaustive, Random, ExhaustiveThenRandom };
  Strategy strategy = Strategy::ExhaustiveThenRandom;
  uint8_t width_cap = 8;
  uint64_t input_budget = 1ull << 24;  // max enumerated combinations
  uint64_t random_trials = 1000000;
  uint64_t random_seed = 0x5eed;
};

// Enumeration cannot run within the input budget (or the strategy cannot make
// progress). Distinct from an inconclusive verdict.
class VerifyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifyVerdict {
  enum class Result { ProvenEqual, Refuted, Inconclusive };
  Result result = Result::Inconclusive;
  std::optional<Testcase> counterexample;  // replays the divergence
  uint64_t inputs_checked = 0;
  uint64_t inputs_skipped = 0;  // the target itself faulted on these
  bool exhaustive = false;      // a complete sweep of the reduced domain ran
  std::string detail;
};

const char* verdict_name(VerifyVerdict::Result r);

// Checks rewrite against spec.target on the spec's live-out contract.
// Divergence means: any live-out value/definedness mismatch (registers,
// flags, memory), or any rewrite fault on an input the target runs cleanly.
// Throws VerifyError when an exhaustive-only strategy exceeds input_budget.
VerifyVerdict verify_equivalence(const Program& rewrite,
                                 const TargetSpec& spec,
                                 const VerifyConfig& cfg,
                                 const Isa& isa = Isa::instance());

// VerifierClient backed by verify_equivalence with a verdict cache keyed by
// canonical program text. Thread-safe; chains of one job share an instance so
// repeated escalations of the same candidate cost one enumeration.
class OracleVerifier : public VerifierClient {
 public:
  OracleVerifier(const TargetSpec& spec, VerifyConfig cfg,
                 const Isa& isa = Isa::instance());
  VerifierAnswer classify(const Program& rewrite) override;

  // Full verdict (uncached queries, reporting).
  VerifyVerdict verdict(const Program& rewrite);
  uint64_t calls() const { return calls_; }
  uint64_t cache_hits() const { return cache_hits_; }

 private:
  const TargetSpec* spec_;
  VerifyConfig cfg_;
  const Isa* isa_;
  std::mutex mu_;
  std::unordered_map<std::string, VerifierAnswer> cache_;
  uint64_t calls_ = 0;
  uint64_t cache_hits_ = 0;
};

}  // namespace stochopt

#endif  // STOCHOPT_VERIFY_HPP
