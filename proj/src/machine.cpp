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

#include "stochopt/machine.hpp"

#include <algorithm>
#include <bit>

namespace stochopt {

AddrSet::AddrSet(std::vector<uint64_t> addrs) : addrs_(std::move(addrs)) {
  std::sort(addrs_.begin(), addrs_.end());
  addrs_.erase(std::unique(addrs_.begin(), addrs_.end()), addrs_.end());
}

void AddrSet::add(uint64_t addr) {
  auto it = std::lower_bound(addrs_.begin(), addrs_.end(), addr);
  if (it == addrs_.end() || *it != addr) addrs_.insert(it, addr);
}

void AddrSet::add_span(uint64_t addr, uint64_t len) {
  for (uint64_t i = 0; i < len; ++i) add(addr + i);
}

bool AddrSet::contains(uint64_t addr) const {
  return std::binary_search(addrs_.begin(), addrs_.end(), addr);
}

namespace {

// Trace hook: when set on the sandbox-owning caller, every dereferenced byte
// address lands here (legal or not, read or write).
thread_local std::vector<uint64_t>* g_trace = nullptr;

inline uint64_t sext(uint64_t v, uint8_t bits) {
  if (bits >= 64) return v;
  uint64_t sign = 1ull << (bits - 1);
  return (v ^ sign) - sign;
}

struct MemAccess {
  bool addr_ok = false;  // base/index were defined
  bool legal = false;    // whole span inside the sandbox's legal set
  uint64_t addr = 0;
};

}  // namespace

void step_inplace(const Instruction& ins, MachineState& s, Sandbox& sb,
                  const Isa& isa) {
  if (ins.unused()) return;
  const Opcode& op = isa.opcode(ins.op);
  const uint8_t w = op.bits;
  const uint64_t wmask = width_mask(w);
  const uint64_t span = w / 8;

  bool faulted = false;
  uint64_t val[2] = {0, 0};
  MemAccess mem;

  // Source scan in fixed operand order; every faulting source bumps its
  // counter, and any fault degrades the instruction to "write defined zero".
  for (int i = 0; i < op.arity(); ++i) {
    const Operand& o = ins.ops[static_cast<size_t>(i)];
    const size_t ui = static_cast<size_t>(i);
    switch (o.kind) {
      case OperandKind::Imm:
        val[ui] = o.imm;
        break;
      case OperandKind::Reg:
        if (op.reads_op[ui]) {
          if (!s.reg_all_defined(o.reg)) {
            ++sb.undef;
            faulted = true;
          }
          val[ui] = s.read_reg(o.reg);
        }
        break;
      case OperandKind::Mem: {
        mem.addr_ok = true;
        if (!s.reg_all_defined(reg64(o.mem.base))) {
          ++sb.undef;
          faulted = true;
          mem.addr_ok = false;
        }
        uint64_t addr = s.regs[o.mem.base];
        if (o.mem.index >= 0) {
          uint8_t idx = static_cast<uint8_t>(o.mem.index);
          if (!s.reg_all_defined(reg64(idx))) {
            ++sb.undef;
            faulted = true;
            mem.addr_ok = false;
          }
          addr += s.regs[idx] * o.mem.scale;
        }
        addr += static_cast<uint64_t>(static_cast<int64_t>(o.mem.disp));
        mem.addr = addr;
        // An address built from undefined registers is junk: skip the
        // dereference entirely (no sigsegv for it).
        if (!mem.addr_ok) break;
        if (g_trace != nullptr)
          for (uint64_t k = 0; k < span; ++k) g_trace->push_back(addr + k);
        mem.legal = true;
        for (uint64_t k = 0; k < span; ++k) {
          if (!sb.address_legal(addr + k)) {
            mem.legal = false;
            break;
          }
        }
        if (!mem.legal) {
          ++sb.sigsegv;  // one fault per access, not per byte
          faulted = true;
          break;
        }
        if (op.reads_op[ui]) {
          bool all_defined = true;
          uint64_t v = 0;
          for (uint64_t k = 0; k < span; ++k) {
            if (!s.byte_defined(addr + k)) all_defined = false;
            v |= static_cast<uint64_t>(s.read_byte(addr + k)) << (8 * k);
          }
          if (!all_defined) {
            ++sb.undef;
            faulted = true;
          }
          val[ui] = v;
        }
        break;
      }
    }
  }

  // Implicit sources: the widening multiply reads r0; carry and conditional
  // families read one flag.
  uint64_t mul_lo_in = 0;
  if (op.sem == Sem::MulWide) {
    Reg r0{0, w};
    if (!s.reg_all_defined(r0)) {
      ++sb.undef;
      faulted = true;
    }
    mul_lo_in = s.read_reg(r0);
  }
  bool flag_in = false;
  if (op.reads_flags != 0) {
    if (!s.flag_defined(op.reads_flags)) {
      ++sb.undef;
      faulted = true;
    }
    flag_in = s.flag_value(op.reads_flags);
  }

  if (faulted) {
    for (int i = 0; i < op.arity(); ++i) {
      const size_t ui = static_cast<size_t>(i);
      if (!op.writes_op[ui]) continue;
      const Operand& o = ins.ops[ui];
      if (o.kind == OperandKind::Reg) {
        s.write_reg(o.reg, 0);
      } else if (o.kind == OperandKind::Mem && mem.addr_ok && mem.legal) {
        for (uint64_t k = 0; k < span; ++k) s.write_byte(mem.addr + k, 0);
      }
    }
    if (op.sem == Sem::MulWide) {
      s.write_reg(Reg{0, w}, 0);
      s.write_reg(Reg{2, w}, 0);
    }
    return;  // flags untouched
  }

  auto set_zf_sf = [&](uint64_t r) {
    s.set_flag(kZF, (r & wmask) == 0);
    s.set_flag(kSF, ((r >> (w - 1)) & 1) != 0);
  };

  switch (op.sem) {
    case Sem::Mov:
      s.write_reg(ins.ops[1].reg, val[0]);
      break;

    case Sem::Add:
    case Sem::Adc: {
      uint64_t cin = op.sem == Sem::Adc && flag_in ? 1 : 0;
      unsigned __int128 wide = static_cast<unsigned __int128>(val[0]) +
                               val[1] + cin;
      uint64_t r = static_cast<uint64_t>(wide) & wmask;
      s.set_flag(kCF, ((wide >> w) & 1) != 0);
      s.set_flag(kOF,
                 ((((val[0] ^ r) & (val[1] ^ r)) >> (w - 1)) & 1) != 0);
      set_zf_sf(r);
      s.write_reg(ins.ops[1].reg, r);
      break;
    }

    case Sem::Sub:
    case Sem::Sbb:
    case Sem::Cmp: {
      // dst - src (operand order is src, dst).
      uint64_t a = val[0], b = val[1];
      uint64_t cin = op.sem == Sem::Sbb && flag_in ? 1 : 0;
      uint64_t r = (b - a - cin) & wmask;
      s.set_flag(kCF, static_cast<unsigned __int128>(a) + cin > b);
      s.set_flag(kOF, ((((b ^ a) & (b ^ r)) >> (w - 1)) & 1) != 0);
      set_zf_sf(r);
      if (op.sem != Sem::Cmp) s.write_reg(ins.ops[1].reg, r);
      break;
    }

    case Sem::Neg: {
      uint64_t a = val[0];
      uint64_t r = (0 - a) & wmask;
      s.set_flag(kCF, a != 0);
      s.set_flag(kOF, a == (1ull << (w - 1)));
      set_zf_sf(r);
      s.write_reg(ins.ops[0].reg, r);
      break;
    }

    case Sem::Not:
      s.write_reg(ins.ops[0].reg, ~val[0] & wmask);
      break;

    case Sem::And:
    case Sem::Or:
    case Sem::Xor:
    case Sem::Test: {
      uint64_t r;
      if (op.sem == Sem::Or)
        r = val[0] | val[1];
      else if (op.sem == Sem::Xor)
        r = val[0] ^ val[1];
      else
        r = val[0] & val[1];
      r &= wmask;
      s.set_flag(kCF, false);
      s.set_flag(kOF, false);
      set_zf_sf(r);
      if (op.sem != Sem::Test) s.write_reg(ins.ops[1].reg, r);
      break;
    }

    case Sem::Shl:
    case Sem::Shr:
    case Sem::Sar: {
      uint64_t count = val[0] & (w == 64 ? 63 : 31);
      uint64_t a = val[1];
      if (count == 0) break;  // no write, no flag change
      uint64_t r;
      bool cf;
      if (op.sem == Sem::Shl) {
        r = count < w ? (a << count) & wmask : 0;
        cf = count <= w && (((a >> (w - count)) & 1) != 0);
      } else if (op.sem == Sem::Shr) {
        r = count < w ? a >> count : 0;
        cf = count <= w && (((a >> (count - 1)) & 1) != 0);
      } else {
        int64_t sa = static_cast<int64_t>(sext(a, w));
        bool sign = ((a >> (w - 1)) & 1) != 0;
        r = count < w ? static_cast<uint64_t>(sa >> count) & wmask
                      : (sign ? wmask : 0);
        cf = count <= w
                 ? (((static_cast<uint64_t>(sa) >> (count - 1)) & 1) != 0)
                 : sign;
      }
      s.set_flag(kCF, cf);
      if (count == 1) {
        bool of;
        if (op.sem == Sem::Shl)
          of = cf != (((r >> (w - 1)) & 1) != 0);
        else if (op.sem == Sem::Shr)
          of = ((a >> (w - 1)) & 1) != 0;
        else
          of = false;
        s.set_flag(kOF, of);
      } else {
        s.set_flag_undefined(kOF);
      }
      set_zf_sf(r);
      s.write_reg(ins.ops[1].reg, r);
      break;
    }

    case Sem::Imul: {
      __int128 full = static_cast<__int128>(static_cast<int64_t>(
                          sext(val[0], w))) *
                      static_cast<int64_t>(sext(val[1], w));
      uint64_t r = static_cast<uint64_t>(full) & wmask;
      bool overflow = full != static_cast<__int128>(
                                  static_cast<int64_t>(sext(r, w)));
      s.set_flag(kCF, overflow);
      s.set_flag(kOF, overflow);
      s.set_flag_undefined(kZF);
      s.set_flag_undefined(kSF);
      s.write_reg(ins.ops[1].reg, r);
      break;
    }

    case Sem::MulWide: {
      unsigned __int128 prod =
          static_cast<unsigned __int128>(mul_lo_in) * val[0];
      uint64_t lo = static_cast<uint64_t>(prod) & wmask;
      uint64_t hi = static_cast<uint64_t>(prod >> w) & wmask;
      s.set_flag(kCF, hi != 0);
      s.set_flag(kOF, hi != 0);
      s.set_flag_undefined(kZF);
      s.set_flag_undefined(kSF);
      s.write_reg(Reg{0, w}, lo);
      s.write_reg(Reg{2, w}, hi);
      break;
    }

    case Sem::Popcnt: {
      uint64_t r = static_cast<uint64_t>(std::popcount(val[0]));
      s.set_flag(kZF, val[0] == 0);
      s.set_flag(kCF, false);
      s.set_flag(kSF, false);
      s.set_flag(kOF, false);
      s.write_reg(ins.ops[1].reg, r);
      break;
    }

    case Sem::SetCc: {
      bool taken = op.cond == Cond::E || op.cond == Cond::B ? flag_in
                                                            : !flag_in;
      s.write_reg(ins.ops[0].reg, taken ? 1 : 0);
      break;
    }

    case Sem::CmovCc: {
      bool taken = op.cond == Cond::B || op.cond == Cond::E ? flag_in
                                                            : !flag_in;
      // Both paths write at width: a false condition re-writes the old value
      // (still zero-extending the 32-bit views).
      s.write_reg(ins.ops[1].reg, taken ? val[0] : val[1]);
      break;
    }

    case Sem::Load:
      s.write_reg(ins.ops[1].reg, val[0]);
      break;

    case Sem::Store:
      for (uint64_t k = 0; k < span; ++k)
        s.write_byte(mem.addr + k,
                     static_cast<uint8_t>((val[0] >> (8 * k)) & 0xff));
      break;
  }
}

MachineState step(const Instruction& ins, const MachineState& s, Sandbox& sb,
                  const Isa& isa) {
  MachineState next = s;
  step_inplace(ins, next, sb, isa);
  return next;
}

Outcome execute(const Program& p, const MachineState& s0, const AddrSet* legal,
                const Isa& isa) {
  Outcome out;
  out.state = s0;
  Sandbox sb;
  sb.legal = legal;
  for (const auto& ins : p.slots) {
    if (ins.unused()) continue;
    step_inplace(ins, out.state, sb, isa);
  }
  out.sigsegv = sb.sigsegv;
  out.sigfloat = sb.sigfloat;
  out.undef = sb.undef;
  return out;
}

AddrSet record_trace(const Program& p, const MachineState& s0,
                     const Isa& isa) {
  std::vector<uint64_t> touched;
  g_trace = &touched;
  MachineState s = s0;
  Sandbox sb;  // permissive: every address legal
  for (const auto& ins : p.slots) {
    if (ins.unused()) continue;
    step_inplace(ins, s, sb, isa);
  }
  g_trace = nullptr;
  return AddrSet(std::move(touched));
}

}  // namespace stochopt
