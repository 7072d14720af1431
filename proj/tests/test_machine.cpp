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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "reference_semantics.hpp"
#include "stochopt/asm_text.hpp"
#include "stochopt/machine.hpp"
#include "stochopt/rng.hpp"

using namespace stochopt;

namespace {

MachineState defined_state(Rng& rng) {
  MachineState s;
  for (int i = 0; i < kNumRegs; ++i) {
    s.regs[i] = rng.next();
    s.reg_defined[i] = ~0ull;
  }
  s.flags = static_cast<uint8_t>(rng.next() & kAllFlags);
  s.flags_defined = kAllFlags;
  return s;
}

Instruction ins1(const char* text) {
  return parse_program(text, 1).slots[0];
}

}  // namespace

TEST_CASE("32-bit writes zero the upper half") {
  MachineState s;
  s.write_reg(reg64(2), 0xFFFFFFFF00000012ull);
  Sandbox sb;
  step_inplace(ins1("movl r2d, r2d"), s, sb);
  CHECK(s.regs[2] == 0x12);
  CHECK(s.reg_defined[2] == ~0ull);
  CHECK(sb.total_faults() == 0);
}

TEST_CASE("64-bit add carries and overflows at the top bit") {
  MachineState s;
  s.write_reg(reg64(0), 1ull << 63);
  s.write_reg(reg64(1), 1ull << 63);
  Sandbox sb;
  step_inplace(ins1("addq r1, r0"), s, sb);
  CHECK(s.regs[0] == 0);
  CHECK(s.flag_value(kCF));
  CHECK(s.flag_value(kZF));
  CHECK(s.flag_value(kOF));
  CHECK_FALSE(s.flag_value(kSF));
  CHECK(s.flags_defined == kAllFlags);
  CHECK(sb.total_faults() == 0);
}

TEST_CASE("widening multiply fills the hi:lo pair") {
  MachineState s;
  s.write_reg(reg64(0), 1ull << 32);
  s.write_reg(reg64(1), 1ull << 32);
  Sandbox sb;
  step_inplace(ins1("mulq r1"), s, sb);
  CHECK(s.regs[2] == 1);  // high half
  CHECK(s.regs[0] == 0);  // low half
  CHECK(s.flag_value(kCF));
  CHECK(s.flag_value(kOF));
  CHECK_FALSE(s.flag_defined(kZF));
  CHECK_FALSE(s.flag_defined(kSF));
  CHECK(sb.total_faults() == 0);
}

TEST_CASE("UNUSED slots and all-UNUSED programs are identities") {
  Rng rng(7);
  MachineState s0 = defined_state(rng);
  Program p(6);  // every slot UNUSED
  Outcome o = execute(p, s0, nullptr);
  CHECK(o.state == s0);
  CHECK(o.sigsegv == 0);
  CHECK(o.sigfloat == 0);
  CHECK(o.undef == 0);
}

TEST_CASE("execute is pure and deterministic") {
  Rng rng(11);
  MachineState s0 = defined_state(rng);
  MachineState snapshot = s0;
  Program p = parse_program("addq r1, r0\nmulq r3\nnotb r5b\n", 4);
  Outcome a = execute(p, s0, nullptr);
  CHECK(s0 == snapshot);  // input untouched
  Outcome b = execute(p, s0, nullptr);
  CHECK(a.state == b.state);
  CHECK(a.undef == b.undef);
}

TEST_CASE("reading an undefined register faults and degrades to zero") {
  MachineState s;  // nothing defined
  s.write_reg(reg64(0), 5);
  Sandbox sb;
  step_inplace(ins1("addq r1, r0"), s, sb);  // r1 undefined
  CHECK(sb.undef == 1);
  CHECK(s.regs[0] == 0);  // degraded write of defined zero
  CHECK(s.reg_all_defined(reg64(0)));
  // Flags stay untouched on the degraded path.
  CHECK(s.flags_defined == 0);
}

TEST_CASE("partially defined view reads fault") {
  MachineState s;
  s.write_reg(reg8(0), 0x12);  // only the low byte defined
  Sandbox sb;
  step_inplace(ins1("movl r0d, r1d"), s, sb);
  CHECK(sb.undef == 1);
  // An 8-bit read of the same register is clean.
  Sandbox sb2;
  step_inplace(ins1("movb r0b, r1b"), s, sb2);
  CHECK(sb2.undef == 0);
  CHECK((s.regs[1] & 0xff) == 0x12);
}

TEST_CASE("undefined flag reads fault carry and conditional families") {
  MachineState s;
  s.write_reg(reg64(0), 1);
  s.write_reg(reg64(1), 1);
  Sandbox sb;
  step_inplace(ins1("adcq r1, r0"), s, sb);  // CF undefined
  CHECK(sb.undef == 1);
  CHECK(s.regs[0] == 0);

  MachineState t;
  t.write_reg(reg8(3), 0);
  Sandbox sb2;
  step_inplace(ins1("sete r3b"), t, sb2);  // ZF undefined
  CHECK(sb2.undef == 1);
  CHECK((t.regs[3] & 0xff) == 0);
}

TEST_CASE("illegal dereference traps: load zeroes, store is suppressed") {
  AddrSet legal;
  legal.add_span(1000, 8);
  MachineState s;
  s.write_reg(reg64(6), 2000);  // points outside the legal window
  s.write_reg(reg64(0), 0xdeadbeef);

  Program load = parse_program("loadq (r6), r0\n", 1);
  Outcome o = execute(load, s, &legal);
  CHECK(o.sigsegv == 1);
  CHECK(o.state.regs[0] == 0);  // destination degraded to defined zero
  CHECK(o.state.reg_all_defined(reg64(0)));

  Program store = parse_program("storeq r0, (r6)\n", 1);
  Outcome o2 = execute(store, s, &legal);
  CHECK(o2.sigsegv == 1);
  CHECK(o2.state.mem.empty());  // nothing written anywhere
}

TEST_CASE("legal loads assemble bytes little-endian") {
  AddrSet legal;
  legal.add_span(1000, 8);
  MachineState s;
  s.write_reg(reg64(6), 1000);
  for (uint64_t i = 0; i < 8; ++i)
    s.write_byte(1000 + i, static_cast<uint8_t>(0x10 + i));
  Program p = parse_program("loadq (r6), r0\n", 1);
  Outcome o = execute(p, s, &legal);
  CHECK(o.sigsegv == 0);
  CHECK(o.state.regs[0] == 0x1716151413121110ull);
}

TEST_CASE("partially undefined memory reads fault") {
  AddrSet legal;
  legal.add_span(1000, 4);
  MachineState s;
  s.write_reg(reg64(6), 1000);
  s.write_byte(1000, 0xaa);
  s.write_byte(1001, 0xbb);
  s.write_byte(1002, 0xcc);  // byte 1003 left undefined
  Program p = parse_program("loadl (r6), r0d\n", 1);
  Outcome o = execute(p, s, &legal);
  CHECK(o.undef == 1);
  CHECK(o.state.regs[0] == 0);
}

TEST_CASE("store writes exactly the operation span") {
  MachineState s;
  s.write_reg(reg64(6), 1000);
  s.write_reg(reg32(0), 0x44332211);
  Program p = parse_program("storel r0d, 8(r6)\n", 1);
  Outcome o = execute(p, s, nullptr);
  CHECK(o.state.mem.size() == 4);
  CHECK(o.state.read_byte(1008) == 0x11);
  CHECK(o.state.read_byte(1011) == 0x44);
  CHECK_FALSE(o.state.byte_defined(1012));
}

TEST_CASE("undefined address registers skip the dereference") {
  MachineState s;  // r6 undefined
  s.write_reg(reg64(0), 7);
  Program p = parse_program("storeq r0, (r6)\n", 1);
  Outcome o = execute(p, s, nullptr);
  CHECK(o.undef == 1);
  CHECK(o.sigsegv == 0);  // junk addresses don't double-count as segv
  CHECK(o.state.mem.empty());
}

TEST_CASE("record_trace collects dereferenced spans once") {
  MachineState s;
  s.write_reg(reg64(6), 1000);
  s.write_reg(reg64(0), 1);
  // Two loads of the same address plus one store elsewhere.
  Program p = parse_program(
      "loadq 8(r6), r1\n"
      "loadq 8(r6), r2\n"
      "storeb r0b, 100(r6)\n",
      4);
  AddrSet t = record_trace(p, s);
  CHECK(t.size() == 9);  // 8-byte span once + 1 stored byte
  for (uint64_t a = 1008; a < 1016; ++a) CHECK(t.contains(a));
  CHECK(t.contains(1100));
  CHECK_FALSE(t.contains(1007));

  Program none = parse_program("addq r0, r1\n", 1);
  CHECK(record_trace(none, s).empty());
}

TEST_CASE("counters are monotone across steps") {
  MachineState s;  // everything undefined: each step faults
  Sandbox sb;
  uint64_t prev = 0;
  Instruction faulty = ins1("addq r1, r0");
  for (int i = 0; i < 5; ++i) {
    step_inplace(faulty, s, sb);
    CHECK(sb.total_faults() >= prev);
    prev = sb.total_faults();
  }
  // First step faults on both source reads; later steps only on r1 (r0 was
  // degraded to defined zero).
  CHECK(sb.undef >= 5);
}

TEST_CASE("32-bit destinations zero-extend for every opcode") {
  const Isa& isa = Isa::instance();
  Rng rng(23);
  AddrSet legal;
  legal.add_span(0x2000, 64);
  for (const auto& op : isa.opcodes()) {
    if (op.bits != 32) continue;
    for (int attempt = 0; attempt < 32; ++attempt) {
      MachineState s = defined_state(rng);
      s.write_reg(reg64(6), 0x2000);
      for (uint64_t a = 0x2000; a < 0x2040; ++a)
        s.write_byte(a, static_cast<uint8_t>(rng.next()));
      Instruction ins;
      ins.op = static_cast<int16_t>(op.id);
      ins.nops = static_cast<uint8_t>(op.arity());
      for (int i = 0; i < op.arity(); ++i) {
        const SigSlot& slot = op.sig[static_cast<size_t>(i)];
        if (slot.kind == OperandKind::Reg)
          ins.ops[i] = Operand::make_reg(
              Reg{static_cast<uint8_t>(rng.below(6)), slot.bits});
        else if (slot.kind == OperandKind::Imm)
          ins.ops[i] = Operand::make_imm(rng.next());
        else
          ins.ops[i] = Operand::make_mem(MemRef{6, -1, 1, 0});
      }
      ins = make_instruction(isa, op.id, ins.ops.data(), op.arity());
      Sandbox sb;
      sb.legal = &legal;
      MachineState next = step(ins, s, sb);
      for (int r = 0; r < kNumRegs; ++r) {
        bool written = next.regs[r] != s.regs[r] ||
                       next.reg_defined[r] != s.reg_defined[r];
        if (written) {
          // Any register this 32-bit instruction touched must end with a
          // defined zero upper half.
          CHECK(next.reg_defined[r] == ~0ull);
          CHECK((next.regs[r] >> 32) == 0);
        }
      }
    }
  }
}

TEST_CASE("register and immediate opcodes agree with the reference "
          "semantics on 10k random draws each") {
  const Isa& isa = Isa::instance();
  Rng rng(0x5eed);
  for (const auto& op : isa.opcodes()) {
    bool has_mem = false;
    for (const auto& slot : op.sig)
      if (slot.kind == OperandKind::Mem) has_mem = true;
    if (has_mem) continue;  // load/store oracled in their own test

    for (int iter = 0; iter < 10000; ++iter) {
      MachineState s = defined_state(rng);
      // Bias toward interesting values now and then.
      if (rng.chance(0.25)) {
        uint64_t specials[] = {0, 1, ~0ull, 1ull << 63, 0x7fffffffull,
                               0x80000000ull, 0xffull, 0x100ull};
        for (int r = 0; r < 4; ++r)
          s.regs[r] = specials[rng.below(8)];
      }

      Instruction ins;
      ins.op = static_cast<int16_t>(op.id);
      ins.nops = static_cast<uint8_t>(op.arity());
      for (int i = 0; i < op.arity(); ++i) {
        const SigSlot& slot = op.sig[static_cast<size_t>(i)];
        if (slot.kind == OperandKind::Reg)
          ins.ops[i] = Operand::make_reg(
              Reg{static_cast<uint8_t>(rng.below(kNumRegs)), slot.bits});
        else
          ins.ops[i] = Operand::make_imm(rng.next());
      }
      ins = make_instruction(isa, op.id, ins.ops.data(), op.arity());

      // Mirror the operand fetch: op 0 is the source, op 1 the destination;
      // unary forms use op 0 for both roles.
      auto fetch = [&](int idx) -> uint64_t {
        const Operand& o = ins.ops[static_cast<size_t>(idx)];
        return o.kind == OperandKind::Imm ? o.imm : s.read_reg(o.reg);
      };
      uint64_t v0 = fetch(0);
      uint64_t v1 = op.arity() > 1 ? fetch(1) : v0;
      bool flag_in =
          op.reads_flags != 0 && s.flag_value(op.reads_flags);
      uint64_t mul_r0 = s.read_reg(Reg{0, op.bits});

      refsem::RefEffect want = refsem::ref_step(op, v0, v1, flag_in, mul_r0);

      Sandbox sb;
      MachineState next = step(ins, s, sb);
      REQUIRE(sb.total_faults() == 0);

      // Expected register file: apply the reference writes through an
      // independently coded view-merge rule.
      auto merged = [&](Reg r, uint64_t value) -> uint64_t {
        uint64_t old = s.regs[r.index];
        if (r.bits == 64) return value;
        if (r.bits == 32) return value & 0xffffffffull;
        uint64_t m = refsem::ref_mask(r.bits);
        return (old & ~m) | (value & m);
      };
      MachineState expect = s;
      if (want.writes_dst) {
        const Operand& dst_op =
            ins.ops[static_cast<size_t>(op.writes_op[1] ? 1 : 0)];
        Reg dr = dst_op.reg;
        expect.regs[dr.index] = merged(dr, want.dst);
        expect.reg_defined[dr.index] =
            dr.bits >= 32 ? ~0ull
                          : (expect.reg_defined[dr.index] |
                             refsem::ref_mask(dr.bits));
      }
      if (want.writes_pair) {
        Reg lo{0, op.bits}, hi{2, op.bits};
        expect.regs[0] = merged(lo, want.lo);
        expect.reg_defined[0] = ~0ull;
        expect.regs[2] = merged(hi, want.hi);
        expect.reg_defined[2] = ~0ull;
      }
      for (uint8_t f : {kCF, kZF, kSF, kOF}) {
        if ((want.flags.touched & f) == 0) continue;
        if (want.flags.defined & f)
          expect.set_flag(f, (want.flags.value & f) != 0);
        else
          expect.set_flag_undefined(f);
      }

      if (!(next == expect)) {
        CAPTURE(op.mnemonic);
        CAPTURE(iter);
        CAPTURE(v0);
        CAPTURE(v1);
        REQUIRE(next == expect);
      }
    }
  }
}

TEST_CASE("load and store agree with a byte-loop oracle on 10k draws each") {
  const Isa& isa = Isa::instance();
  Rng rng(0xfeed);
  for (const auto& op : isa.opcodes()) {
    if (op.sem != Sem::Load && op.sem != Sem::Store) continue;
    const uint64_t span = op.bits / 8;
    for (int iter = 0; iter < 10000; ++iter) {
      MachineState s = defined_state(rng);
      uint64_t base = 0x1000 + rng.below(64);
      int8_t index = rng.chance(0.5) ? 3 : -1;
      uint8_t scale = static_cast<uint8_t>(1u << rng.below(4));
      int32_t disp = static_cast<int32_t>(rng.below(32)) - 16;
      s.write_reg(reg64(6), base);
      if (index >= 0) s.write_reg(reg64(3), rng.below(8));
      MemRef mr{6, index, scale, disp};
      uint64_t addr = base + disp +
                      (index >= 0 ? s.regs[3] * scale : 0);
      AddrSet legal;
      legal.add_span(addr, span);
      for (uint64_t k = 0; k < span; ++k)
        s.write_byte(addr + k, static_cast<uint8_t>(rng.next()));

      Instruction ins;
      if (op.sem == Sem::Load) {
        Operand ops[2] = {Operand::make_mem(mr),
                          Operand::make_reg(Reg{1, op.bits})};
        ins = make_instruction(isa, op.id, ops, 2);
      } else {
        Operand ops[2] = {Operand::make_reg(Reg{1, op.bits}),
                          Operand::make_mem(mr)};
        ins = make_instruction(isa, op.id, ops, 2);
      }
      Sandbox sb;
      sb.legal = &legal;
      MachineState next = step(ins, s, sb);
      REQUIRE(sb.total_faults() == 0);

      if (op.sem == Sem::Load) {
        uint64_t want = 0;
        for (uint64_t k = 0; k < span; ++k)
          want |= static_cast<uint64_t>(s.read_byte(addr + k)) << (8 * k);
        CHECK(next.read_reg(Reg{1, op.bits}) == want);
        if (op.bits >= 32) CHECK((next.regs[1] >> 32) == (op.bits == 64 ? want >> 32 : 0));
      } else {
        uint64_t v = s.read_reg(Reg{1, op.bits});
        for (uint64_t k = 0; k < span; ++k) {
          CHECK(next.byte_defined(addr + k));
          CHECK(next.read_byte(addr + k) ==
                static_cast<uint8_t>((v >> (8 * k)) & 0xff));
        }
      }
      // Neither transfers flags.
      CHECK(next.flags == s.flags);
      CHECK(next.flags_defined == s.flags_defined);
    }
  }
}

TEST_CASE("write_reg_masked keeps canonical zeros in undefined bits") {
  MachineState s;
  s.write_reg_masked(reg64(0), 0xffffffffffffffffull, 0x00ff00ff00ff00ffull);
  CHECK(s.regs[0] == 0x00ff00ff00ff00ffull);
  CHECK(s.reg_defined[0] == 0x00ff00ff00ff00ffull);
  // 32-bit masked writes still define the upper half as zero.
  MachineState t;
  t.write_reg_masked(reg32(1), 0xff, 0xff);
  CHECK(t.reg_defined[1] == (~0ull << 32 | 0xff));
  CHECK(t.regs[1] == 0xff);
}
