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

#ifndef STOCHOPT_MCMC_HPP
#define STOCHOPT_MCMC_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "stochopt/cost.hpp"
#include "stochopt/isa.hpp"
#include "stochopt/rng.hpp"
#include "stochopt/testgen.hpp"

namespace stochopt {

// ---------------------------------------------------------------------------
// Proposal distribution over fixed-capacity programs.
//
// Four move kinds:
//   Opcode      replace the opcode of a random active slot with one from its
//               signature class
//   Operand     replace one operand of a random active slot with one from its
//               slot's domain
//   Swap        exchange two random slots
//   Instruction replace a random slot wholesale: UNUSED with probability p_u,
//               otherwise a uniform opcode with uniform operands
// Opcode and Operand moves fall through to Instruction mechanics when the
// program has no active slot.
//
// Acceptance is plain Metropolis on the cost difference: improvements are
// always taken, a regression of d survives with probability exp(-beta*d).
// Opcode/Operand/Swap are exactly symmetric. Instruction moves are symmetric
// between two real contents, but the UNUSED token carries p_u of the mass
// while any one concrete instruction carries (1-p_u)/N over a content space
// of size N. With N >> 1/p_u this deliberately biases the walk toward short
// programs relative to exp(-beta*cost)/Z -- dead code is easy to delete and
// hard to re-propose -- which is the parsimony pressure the optimizer relies
// on. Descriptors still record both proposal log-probabilities for
// diagnostics, and the stationary distribution is exactly Gibbs whenever
// p_u = 1/(N+1).
// ---------------------------------------------------------------------------

struct MoveParams {
  double p_c = 1.0 / 6;  // Opcode
  double p_o = 1.0 / 2;  // Operand
  double p_s = 1.0 / 6;  // Swap
  double p_i = 1.0 / 6;  // Instruction
  double p_u = 0.16;     // UNUSED mass inside Instruction moves
  double beta = 0.1;

  // Throws std::invalid_argument unless the four kind probabilities are
  // nonnegative and sum to 1 within 1e-9, p_u is in [0,1], and beta > 0.
  void validate() const;
};

// The sampling domains moves draw from. Immutable once built; shared by all
// chains of a job.
class ProposalUniverse {
 public:
  struct Config {
    std::vector<uint16_t> opcodes;   // empty: whole roster
    std::vector<uint8_t> registers;  // empty: all 16
    std::vector<uint64_t> constants; // merged with the default bag by default
    bool use_default_bag = true;
    std::vector<MemRef> mem_pool;    // memory operands; empty drops load/store
  };

  static ProposalUniverse make(Config cfg, const Isa& isa = Isa::instance());

  // Extends the domains so every opcode, register, immediate, and memory
  // operand of `p` can be re-proposed. Required for any program a chain may
  // start from: a content the distribution cannot produce would make moves
  // away from it irreversible.
  void absorb(const Program& p);

  const Isa& isa() const { return *isa_; }
  const std::vector<uint16_t>& opcodes() const { return opcodes_; }
  const std::vector<uint8_t>& registers() const { return registers_; }
  const std::vector<uint64_t>& constants() const { return constants_; }
  const std::vector<uint64_t>& shift_counts() const { return shift_counts_; }
  const std::vector<MemRef>& mem_pool() const { return mem_pool_; }

  // Opcodes of this universe sharing `opcode_id`'s signature (itself
  // included when it is part of the universe).
  const std::vector<uint16_t>& class_members(int opcode_id) const;

  // Domain of one operand slot of a concrete opcode. Shift-count immediate
  // slots use the deduplicated masked bag so sampling stays uniform over
  // distinct values.
  uint64_t domain_size(const Opcode& op, int slot) const;
  Operand sample_operand(const Opcode& op, int slot, Rng& rng) const;
  bool operand_in_domain(const Opcode& op, int slot, const Operand& o) const;

  Instruction sample_instruction(Rng& rng) const;
  bool contains_instruction(const Instruction& ins) const;

  // log probability that an Instruction move draws exactly this content.
  double log_q_content(const Instruction& ins, const MoveParams& mp) const;

 private:
  ProposalUniverse() = default;
  void rebuild_classes();

  const Isa* isa_ = nullptr;
  std::vector<uint16_t> opcodes_;
  std::vector<uint8_t> registers_;
  std::vector<uint64_t> constants_;
  std::vector<uint64_t> shift_counts_;  // constants_ masked to 0..63, dedup
  std::vector<MemRef> mem_pool_;
  std::vector<std::vector<uint16_t>> members_by_class_;
  std::vector<uint16_t> empty_;
};

// Immediate-operand class at the isa level: the bag plus the queried operand
// itself (so the class always contains it).
std::vector<uint64_t> immediate_class(const std::vector<uint64_t>& bag,
                                      uint64_t current);

enum class MoveKind : uint8_t { Opcode, Operand, Swap, Instruction };

const char* move_kind_name(MoveKind k);

struct MoveDescriptor {
  MoveKind kind = MoveKind::Opcode;  // as drawn (before any degradation)
  bool degraded = false;  // Opcode/Operand acted as Instruction (no active slot)
  int slot = -1;
  int slot2 = -1;          // swap partner
  int operand_index = -1;  // operand moves
  Instruction before;
  Instruction after;
  // Choice-set sizes for symmetric moves; equal by construction.
  uint64_t fwd_choices = 1;
  uint64_t bwd_choices = 1;
  // log q(old->new) and log q(new->old) for Instruction-mechanics moves;
  // diagnostics only, acceptance never reads them.
  double log_q_fwd = 0.0;
  double log_q_bwd = 0.0;
  // log q(new->old) - log q(old->new); zero for symmetric moves.
  double log_q_ratio = 0.0;
};

// Samples one move and applies it to `p` in place.
MoveDescriptor propose(Program& p, const ProposalUniverse& u,
                       const MoveParams& mp, Rng& rng);

// Largest candidate cost that survives acceptance: a proposal is accepted
// iff cost(candidate) < current - log(p)/beta with p uniform in (0,1].
// Evaluation can stop early once the running cost reaches the bound.
inline double acceptance_bound(double p, double current_total, double beta) {
  return current_total - std::log(p) / beta;
}

// ---------------------------------------------------------------------------
// Chains.
// ---------------------------------------------------------------------------

// Cost oracle a chain minimizes. The testcase-backed model is the production
// implementation; tests may substitute arbitrary functions.
class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual EvalResult full(const Program& p) = 0;
  virtual EvalResult bounded(const Program& p, double bound) = 0;
  // Adds a counterexample to the suite; false if rejected (duplicate, cap, or
  // the model has no suite).
  virtual bool refine(const Testcase& tc) { (void)tc; return false; }
};

class TestcaseCostModel : public CostModel {
 public:
  TestcaseCostModel(EvalContext ctx, std::vector<Testcase> tau,
                    size_t max_testcases = 1024,
                    const Isa& isa = Isa::instance());
  EvalResult full(const Program& p) override;
  EvalResult bounded(const Program& p, double bound) override;
  bool refine(const Testcase& tc) override;

  const std::vector<Testcase>& tau() const { return tau_; }
  // Testcases added by refine() since the last drain (epoch synchronization).
  std::vector<Testcase> drain_fresh();

 private:
  EvalContext ctx_;
  std::vector<Testcase> tau_;
  std::vector<Testcase> fresh_;
  size_t max_testcases_;
  const Isa* isa_;
};

struct ChainStats {
  void add(const ChainStats& o);

  uint64_t proposals = 0;
  uint64_t accepted = 0;
  std::array<uint64_t, 4> proposed_by_kind{};
  std::array<uint64_t, 4> accepted_by_kind{};
  uint64_t testcases_evaluated = 0;
  uint64_t early_stops = 0;
  uint64_t refinements = 0;
  uint64_t verifier_errors = 0;
};

struct StepInfo {
  MoveDescriptor move;
  bool accepted = false;
  bool refined = false;
  double bound = 0.0;
  CostReport proposal_report;  // partial when evaluation stopped early
  size_t testcases_used = 0;
};

class Chain {
 public:
  Chain(Program start, const ProposalUniverse& universe, MoveParams moves,
        uint64_t seed, CostModel& cost);

  StepInfo step();

  const Program& current() const { return current_; }
  const CostReport& current_cost() const { return current_cost_; }
  const Program& best() const { return best_; }
  const CostReport& best_cost() const { return best_cost_; }
  const ChainStats& stats() const { return stats_; }
  Rng& rng() { return rng_; }

  // Program proposed by the most recent step(): equals current() right after
  // an accepted step, the discarded scratch copy otherwise. Valid until the
  // next step().
  const Program& last_proposal() const {
    return last_accepted_ ? current_ : scratch_;
  }

  // Re-evaluates current and best after the testcase suite changed. Keeps
  // best_cost <= current_cost.
  void recompute_costs();

 private:
  const ProposalUniverse* universe_;
  MoveParams moves_;
  CostModel* cost_;
  Rng rng_;
  Program current_;
  Program best_;
  Program scratch_;
  CostReport current_cost_;
  CostReport best_cost_;
  ChainStats stats_;
  bool last_accepted_ = false;
};

// Runs `budget` steps from `start` and returns the chain for inspection.
Chain run_chain(Program start, const ProposalUniverse& universe,
                MoveParams moves, uint64_t seed, CostModel& cost,
                uint64_t budget);

}  // namespace stochopt

#endif  // STOCHOPT_MCMC_HPP
