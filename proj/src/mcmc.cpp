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

#include "stochopt/mcmc.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace stochopt {

void ChainStats::add(const ChainStats& o) {
  proposals += o.proposals;
  accepted += o.accepted;
  for (size_t i = 0; i < 4; ++i) {
    proposed_by_kind[i] += o.proposed_by_kind[i];
    accepted_by_kind[i] += o.accepted_by_kind[i];
  }
  testcases_evaluated += o.testcases_evaluated;
  early_stops += o.early_stops;
  refinements += o.refinements;
  verifier_errors += o.verifier_errors;
}

void MoveParams::validate() const {
  if (p_c < 0 || p_o < 0 || p_s < 0 || p_i < 0)
    throw std::invalid_argument("move probabilities must be nonnegative");
  double sum = p_c + p_o + p_s + p_i;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(
        "move kind probabilities must sum to 1 (got " + std::to_string(sum) +
        ")");
  if (p_u < 0 || p_u > 1)
    throw std::invalid_argument("p_u must be in [0, 1]");
  if (!(beta > 0))
    throw std::invalid_argument("beta must be positive");
}

const char* move_kind_name(MoveKind k) {
  switch (k) {
    case MoveKind::Opcode: return "opcode";
    case MoveKind::Operand: return "operand";
    case MoveKind::Swap: return "swap";
    case MoveKind::Instruction: return "instruction";
  }
  return "?";
}

// ----------------------------- ProposalUniverse ---------------------------

namespace {

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

bool mem_less(const MemRef& a, const MemRef& b) {
  if (a.base != b.base) return a.base < b.base;
  if (a.index != b.index) return a.index < b.index;
  if (a.scale != b.scale) return a.scale < b.scale;
  return a.disp < b.disp;
}

bool is_shift(const Opcode& op) {
  return op.sem == Sem::Shl || op.sem == Sem::Shr || op.sem == Sem::Sar;
}

}  // namespace

ProposalUniverse ProposalUniverse::make(Config cfg, const Isa& isa) {
  ProposalUniverse u;
  u.isa_ = &isa;

  if (cfg.opcodes.empty()) {
    for (int i = 0; i < isa.num_opcodes(); ++i)
      cfg.opcodes.push_back(static_cast<uint16_t>(i));
  }
  sort_unique(cfg.opcodes);
  // Without memory operands to draw, memory opcodes can never be
  // instantiated; drop them so opcode sampling stays total.
  if (cfg.mem_pool.empty()) {
    cfg.opcodes.erase(
        std::remove_if(cfg.opcodes.begin(), cfg.opcodes.end(),
                       [&](uint16_t id) {
                         for (const auto& s : isa.opcode(id).sig)
                           if (s.kind == OperandKind::Mem) return true;
                         return false;
                       }),
        cfg.opcodes.end());
  }
  u.opcodes_ = std::move(cfg.opcodes);

  if (cfg.registers.empty()) {
    for (int i = 0; i < kNumRegs; ++i)
      cfg.registers.push_back(static_cast<uint8_t>(i));
  }
  sort_unique(cfg.registers);
  u.registers_ = std::move(cfg.registers);

  if (cfg.use_default_bag) {
    const auto& bag = default_constant_bag();
    cfg.constants.insert(cfg.constants.end(), bag.begin(), bag.end());
  }
  sort_unique(cfg.constants);
  u.constants_ = std::move(cfg.constants);

  std::sort(cfg.mem_pool.begin(), cfg.mem_pool.end(), mem_less);
  cfg.mem_pool.erase(std::unique(cfg.mem_pool.begin(), cfg.mem_pool.end()),
                     cfg.mem_pool.end());
  u.mem_pool_ = std::move(cfg.mem_pool);

  u.rebuild_classes();
  return u;
}

void ProposalUniverse::rebuild_classes() {
  shift_counts_.clear();
  for (uint64_t v : constants_) shift_counts_.push_back(v & 63);
  sort_unique(shift_counts_);

  members_by_class_.assign(static_cast<size_t>(isa_->num_classes()), {});
  for (uint16_t id : opcodes_)
    members_by_class_[static_cast<size_t>(isa_->class_id(id))].push_back(id);
}

void ProposalUniverse::absorb(const Program& p) {
  bool changed = false;
  auto add_reg = [&](uint8_t idx) {
    if (!std::binary_search(registers_.begin(), registers_.end(), idx)) {
      registers_.push_back(idx);
      changed = true;
    }
  };
  for (const auto& ins : p.slots) {
    if (ins.unused()) continue;
    if (!std::binary_search(opcodes_.begin(), opcodes_.end(),
                            static_cast<uint16_t>(ins.op))) {
      opcodes_.push_back(static_cast<uint16_t>(ins.op));
      changed = true;
    }
    for (int i = 0; i < ins.nops; ++i) {
      const Operand& o = ins.ops[static_cast<size_t>(i)];
      switch (o.kind) {
        case OperandKind::Reg:
          add_reg(o.reg.index);
          break;
        case OperandKind::Imm:
          if (!std::binary_search(constants_.begin(), constants_.end(),
                                  o.imm)) {
            constants_.push_back(o.imm);
            changed = true;
          }
          break;
        case OperandKind::Mem: {
          add_reg(o.mem.base);
          if (o.mem.index >= 0) add_reg(static_cast<uint8_t>(o.mem.index));
          auto it = std::find(mem_pool_.begin(), mem_pool_.end(), o.mem);
          if (it == mem_pool_.end()) {
            mem_pool_.push_back(o.mem);
            changed = true;
          }
          break;
        }
      }
    }
  }
  if (changed) {
    sort_unique(opcodes_);
    sort_unique(registers_);
    sort_unique(constants_);
    std::sort(mem_pool_.begin(), mem_pool_.end(), mem_less);
    mem_pool_.erase(std::unique(mem_pool_.begin(), mem_pool_.end()),
                    mem_pool_.end());
    rebuild_classes();
  }
}

const std::vector<uint16_t>& ProposalUniverse::class_members(
    int opcode_id) const {
  int cls = isa_->class_id(opcode_id);
  const auto& members = members_by_class_[static_cast<size_t>(cls)];
  return members.empty() ? empty_ : members;
}

uint64_t ProposalUniverse::domain_size(const Opcode& op, int slot) const {
  const SigSlot& s = op.sig[static_cast<size_t>(slot)];
  switch (s.kind) {
    case OperandKind::Reg: return registers_.size();
    case OperandKind::Imm:
      return is_shift(op) && slot == 0 ? shift_counts_.size()
                                       : constants_.size();
    case OperandKind::Mem: return mem_pool_.size();
  }
  return 0;
}

Operand ProposalUniverse::sample_operand(const Opcode& op, int slot,
                                         Rng& rng) const {
  const SigSlot& s = op.sig[static_cast<size_t>(slot)];
  switch (s.kind) {
    case OperandKind::Reg:
      return Operand::make_reg(
          Reg{registers_[rng.below(registers_.size())], s.bits});
    case OperandKind::Imm: {
      const auto& bag =
          is_shift(op) && slot == 0 ? shift_counts_ : constants_;
      return Operand::make_imm(bag[rng.below(bag.size())]);
    }
    case OperandKind::Mem:
      return Operand::make_mem(mem_pool_[rng.below(mem_pool_.size())]);
  }
  return Operand();
}

bool ProposalUniverse::operand_in_domain(const Opcode& op, int slot,
                                         const Operand& o) const {
  const SigSlot& s = op.sig[static_cast<size_t>(slot)];
  if (o.kind != s.kind) return false;
  switch (s.kind) {
    case OperandKind::Reg:
      return o.reg.bits == s.bits &&
             std::binary_search(registers_.begin(), registers_.end(),
                                o.reg.index);
    case OperandKind::Imm: {
      const auto& bag =
          is_shift(op) && slot == 0 ? shift_counts_ : constants_;
      return std::binary_search(bag.begin(), bag.end(), o.imm);
    }
    case OperandKind::Mem:
      return std::find(mem_pool_.begin(), mem_pool_.end(), o.mem) !=
             mem_pool_.end();
  }
  return false;
}

Instruction ProposalUniverse::sample_instruction(Rng& rng) const {
  int op_id = opcodes_[rng.below(opcodes_.size())];
  const Opcode& op = isa_->opcode(op_id);
  Operand ops[2];
  for (int i = 0; i < op.arity(); ++i) ops[i] = sample_operand(op, i, rng);
  return make_instruction(*isa_, op_id, ops, op.arity());
}

bool ProposalUniverse::contains_instruction(const Instruction& ins) const {
  if (ins.unused()) return true;
  if (!std::binary_search(opcodes_.begin(), opcodes_.end(),
                          static_cast<uint16_t>(ins.op)))
    return false;
  const Opcode& op = isa_->opcode(ins.op);
  for (int i = 0; i < op.arity(); ++i)
    if (!operand_in_domain(op, i, ins.ops[static_cast<size_t>(i)]))
      return false;
  return true;
}

double ProposalUniverse::log_q_content(const Instruction& ins,
                                       const MoveParams& mp) const {
  if (ins.unused()) return std::log(mp.p_u);
  assert(contains_instruction(ins));
  double lq = std::log(1.0 - mp.p_u) -
              std::log(static_cast<double>(opcodes_.size()));
  const Opcode& op = isa_->opcode(ins.op);
  for (int i = 0; i < op.arity(); ++i)
    lq -= std::log(static_cast<double>(domain_size(op, i)));
  return lq;
}

std::vector<uint64_t> immediate_class(const std::vector<uint64_t>& bag,
                                      uint64_t current) {
  std::vector<uint64_t> out = bag;
  out.push_back(current);
  sort_unique(out);
  return out;
}

// --------------------------------- propose --------------------------------

namespace {

// Applies Instruction-move mechanics to `slot`, filling descriptor q terms.
void instruction_move(Program& p, int slot, const ProposalUniverse& u,
                      const MoveParams& mp, Rng& rng, MoveDescriptor& d,
                      size_t active_before) {
  d.slot = slot;
  d.before = p.slots[static_cast<size_t>(slot)];
  Instruction next = rng.chance(mp.p_u) ? Instruction::unused_slot()
                                        : u.sample_instruction(rng);
  p.slots[static_cast<size_t>(slot)] = next;
  d.after = next;

  size_t active_after = p.active_count();
  double fwd_kind = mp.p_i + (active_before == 0 ? mp.p_c + mp.p_o : 0.0);
  double bwd_kind = mp.p_i + (active_after == 0 ? mp.p_c + mp.p_o : 0.0);
  double log_len = std::log(static_cast<double>(p.capacity()));

  bool old_reachable = u.contains_instruction(d.before);
  assert(old_reachable);
  d.log_q_fwd = std::log(fwd_kind) - log_len + u.log_q_content(next, mp);
  d.log_q_bwd = old_reachable
                    ? std::log(bwd_kind) - log_len + u.log_q_content(d.before, mp)
                    : d.log_q_fwd;  // unreachable content: fall back to symmetric
  d.log_q_ratio = d.log_q_bwd - d.log_q_fwd;
}

}  // namespace

MoveDescriptor propose(Program& p, const ProposalUniverse& u,
                       const MoveParams& mp, Rng& rng) {
  MoveDescriptor d;
  double roll = rng.real01();
  if (roll < mp.p_c)
    d.kind = MoveKind::Opcode;
  else if (roll < mp.p_c + mp.p_o)
    d.kind = MoveKind::Operand;
  else if (roll < mp.p_c + mp.p_o + mp.p_s)
    d.kind = MoveKind::Swap;
  else
    d.kind = MoveKind::Instruction;

  // Active slot positions; needed by everything except Swap. thread_local to
  // keep the hot path allocation-free.
  static thread_local std::vector<int> active_idx;
  size_t active = 0;
  auto collect_active = [&] {
    active_idx.clear();
    for (size_t i = 0; i < p.slots.size(); ++i)
      if (!p.slots[i].unused()) active_idx.push_back(static_cast<int>(i));
    active = active_idx.size();
  };

  switch (d.kind) {
    case MoveKind::Swap: {
      if (p.capacity() < 2) {
        d.slot = d.slot2 = 0;
        d.before = d.after = p.slots.empty() ? Instruction() : p.slots[0];
        return d;
      }
      uint64_t n = p.capacity();
      uint64_t i = rng.below(n);
      uint64_t j = rng.below(n - 1);
      if (j >= i) ++j;  // distinct pair, uniform over ordered pairs
      if (i > j) std::swap(i, j);
      d.slot = static_cast<int>(i);
      d.slot2 = static_cast<int>(j);
      d.before = p.slots[i];
      d.after = p.slots[j];
      std::swap(p.slots[i], p.slots[j]);
      uint64_t pairs = n * (n - 1) / 2;
      d.fwd_choices = d.bwd_choices = pairs;
      return d;
    }

    case MoveKind::Opcode: {
      collect_active();
      if (active == 0) {
        d.degraded = true;
        int slot = static_cast<int>(rng.below(p.capacity()));
        instruction_move(p, slot, u, mp, rng, d, 0);
        return d;
      }
      int slot = active_idx[rng.below(active)];
      Instruction& ins = p.slots[static_cast<size_t>(slot)];
      d.slot = slot;
      d.before = ins;
      const auto& members = u.class_members(ins.op);
      assert(!members.empty());
      uint16_t pick = members[rng.below(members.size())];
      Instruction next =
          make_instruction(u.isa(), pick, ins.ops.data(), ins.nops);
      ins = next;
      d.after = next;
      d.fwd_choices = d.bwd_choices = members.size();
      return d;
    }

    case MoveKind::Operand: {
      collect_active();
      if (active == 0) {
        d.degraded = true;
        int slot = static_cast<int>(rng.below(p.capacity()));
        instruction_move(p, slot, u, mp, rng, d, 0);
        return d;
      }
      int slot = active_idx[rng.below(active)];
      Instruction& ins = p.slots[static_cast<size_t>(slot)];
      d.slot = slot;
      d.before = ins;
      const Opcode& op = u.isa().opcode(ins.op);
      int which = static_cast<int>(rng.below(static_cast<uint64_t>(op.arity())));
      d.operand_index = which;
      Operand ops[2] = {ins.ops[0], ins.ops[1]};
      ops[which] = u.sample_operand(op, which, rng);
      Instruction next = make_instruction(u.isa(), ins.op, ops, op.arity());
      ins = next;
      d.after = next;
      d.fwd_choices = d.bwd_choices = u.domain_size(op, which);
      return d;
    }

    case MoveKind::Instruction: {
      collect_active();
      int slot = static_cast<int>(rng.below(p.capacity()));
      instruction_move(p, slot, u, mp, rng, d, active);
      return d;
    }
  }
  return d;
}

// ------------------------------ cost backends -----------------------------

TestcaseCostModel::TestcaseCostModel(EvalContext ctx, std::vector<Testcase> tau,
                                     size_t max_testcases, const Isa& isa)
    : ctx_(ctx), tau_(std::move(tau)), max_testcases_(max_testcases),
      isa_(&isa) {}

EvalResult TestcaseCostModel::full(const Program& p) {
  return evaluate_cost(p, tau_, ctx_,
                       std::numeric_limits<double>::infinity(), *isa_);
}

EvalResult TestcaseCostModel::bounded(const Program& p, double bound) {
  return evaluate_cost(p, tau_, ctx_, bound, *isa_);
}

bool TestcaseCostModel::refine(const Testcase& tc) {
  if (tau_.size() >= max_testcases_) return false;
  for (const auto& existing : tau_)
    if (existing.input == tc.input) return false;
  tau_.push_back(tc);
  fresh_.push_back(tc);
  return true;
}

std::vector<Testcase> TestcaseCostModel::drain_fresh() {
  std::vector<Testcase> out = std::move(fresh_);
  fresh_.clear();
  return out;
}

// ---------------------------------- Chain ---------------------------------

Chain::Chain(Program start, const ProposalUniverse& universe, MoveParams moves,
             uint64_t seed, CostModel& cost)
    : universe_(&universe),
      moves_(moves),
      cost_(&cost),
      rng_(seed),
      current_(std::move(start)),
      best_(current_),
      scratch_(current_) {
  moves_.validate();
  EvalResult r = cost_->full(current_);
  current_cost_ = r.report;
  best_cost_ = r.report;
  if (r.cex) {
    // The starting point itself can be refuted; fold the counterexample in
    // right away so the suite distinguishes it from the target.
    if (cost_->refine(*r.cex)) recompute_costs();
  }
}

StepInfo Chain::step() {
  StepInfo info;
  scratch_ = current_;
  info.move = propose(scratch_, *universe_, moves_, rng_);
  ++stats_.proposals;
  ++stats_.proposed_by_kind[static_cast<size_t>(info.move.kind)];

  double p = rng_.real_open01();
  info.bound = acceptance_bound(p, static_cast<double>(current_cost_.total),
                                moves_.beta);

  EvalResult res = cost_->bounded(scratch_, info.bound);
  info.proposal_report = res.report;
  info.testcases_used = res.testcases_used;
  stats_.testcases_evaluated += res.testcases_used;
  if (!res.completed) ++stats_.early_stops;
  if (res.verifier_error) ++stats_.verifier_errors;

  info.accepted = res.completed && !res.verifier_error &&
                  static_cast<double>(res.report.total) < info.bound;

  if (res.cex) {
    info.refined = cost_->refine(*res.cex);
    if (info.refined) ++stats_.refinements;
  }

  if (info.accepted) {
    std::swap(current_, scratch_);
    current_cost_ = res.report;
    ++stats_.accepted;
    ++stats_.accepted_by_kind[static_cast<size_t>(info.move.kind)];
  }
  last_accepted_ = info.accepted;

  if (info.refined) {
    // Suite changed: all cached costs are stale.
    recompute_costs();
  } else if (info.accepted && current_cost_.total < best_cost_.total) {
    best_ = current_;
    best_cost_ = current_cost_;
  }
  return info;
}

void Chain::recompute_costs() {
  current_cost_ = cost_->full(current_).report;
  best_cost_ = cost_->full(best_).report;
  if (current_cost_.total < best_cost_.total) {
    best_ = current_;
    best_cost_ = current_cost_;
  }
}

Chain run_chain(Program start, const ProposalUniverse& universe,
                MoveParams moves, uint64_t seed, CostModel& cost,
                uint64_t budget) {
  Chain chain(std::move(start), universe, moves, seed, cost);
  for (uint64_t i = 0; i < budget; ++i) chain.step();
  return chain;
}

}  // namespace stochopt
