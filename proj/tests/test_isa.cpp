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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "stochopt/asm_text.hpp"
#include "stochopt/isa.hpp"
#include "stochopt/mcmc.hpp"
#include "stochopt/rng.hpp"

using namespace stochopt;

TEST_CASE("register names cover all view widths") {
  CHECK(reg_name(Reg{0, 64}) == "r0");
  CHECK(reg_name(Reg{5, 32}) == "r5d");
  CHECK(reg_name(Reg{9, 16}) == "r9w");
  CHECK(reg_name(Reg{15, 8}) == "r15b");
}

TEST_CASE("width masks") {
  CHECK(width_mask(8) == 0xffull);
  CHECK(width_mask(16) == 0xffffull);
  CHECK(width_mask(32) == 0xffffffffull);
  CHECK(width_mask(64) == ~0ull);
}

TEST_CASE("roster composition") {
  const Isa& isa = Isa::instance();
  // Common families at {8,32,64}: mov(2 forms) + 9 ALU bases x 2 forms +
  // neg + not + 3 shifts x 2 forms + load + store = 30 per width.
  // 32/64 only: imul + mul + popcnt + 3 cmovs = 6 per width. Plus 4 setcc.
  CHECK(isa.num_opcodes() == 3 * 30 + 2 * 6 + 4);

  std::map<std::string, int> by_base;
  for (const auto& op : isa.opcodes()) ++by_base[op.base];
  CHECK(by_base["mov"] == 6);     // 2 forms x 3 widths
  CHECK(by_base["add"] == 6);
  CHECK(by_base["shl"] == 6);     // imm and reg count forms x 3 widths
  CHECK(by_base["imul"] == 2);
  CHECK(by_base["mul"] == 2);
  CHECK(by_base["popcnt"] == 2);
  CHECK(by_base["cmove"] == 2);
  CHECK(by_base["sete"] == 1);
  CHECK(by_base["load"] == 3);
  CHECK(by_base["store"] == 3);

  for (const auto& op : isa.opcodes()) {
    CHECK(op.arity() <= 2);
    CHECK((op.bits == 8 || op.bits == 32 || op.bits == 64));
    // The id is the roster index.
    CHECK(&isa.opcode(op.id) == &op);
  }
}

TEST_CASE("mnemonic forms") {
  const Isa& isa = Isa::instance();
  const auto* addq = isa.mnemonic_forms("addq");
  REQUIRE(addq != nullptr);
  CHECK(addq->size() == 2);  // register and immediate sources
  for (uint16_t id : *addq) CHECK(isa.opcode(id).mnemonic == "addq");

  const auto* sete = isa.mnemonic_forms("sete");
  REQUIRE(sete != nullptr);
  CHECK(sete->size() == 1);

  CHECK(isa.mnemonic_forms("bogus") == nullptr);
  CHECK(isa.mnemonic_forms("") == nullptr);
}

TEST_CASE("signature classes partition the roster") {
  const Isa& isa = Isa::instance();
  std::set<int> seen_classes;
  size_t total = 0;
  for (int i = 0; i < isa.num_opcodes(); ++i) {
    int c = isa.class_id(i);
    if (seen_classes.insert(c).second) total += isa.signature_class(i).size();
  }
  CHECK(static_cast<int>(seen_classes.size()) == isa.num_classes());
  CHECK(total == static_cast<size_t>(isa.num_opcodes()));

  // Symmetry: b in class(a) <=> a in class(b); members share the signature.
  for (int a = 0; a < isa.num_opcodes(); ++a) {
    const auto& cls = isa.signature_class(a);
    bool self = false;
    for (uint16_t b : cls) {
      if (b == a) self = true;
      CHECK(isa.opcode(b).sig == isa.opcode(a).sig);
      const auto& back = isa.signature_class(b);
      CHECK(std::find(back.begin(), back.end(), static_cast<uint16_t>(a)) !=
            back.end());
    }
    CHECK(self);
  }
}

TEST_CASE("opcode class keeps signatures apart") {
  const Isa& isa = Isa::instance();
  // addq r,r and shlq imm,r have different signatures, so an opcode move
  // starting from addq can never produce the immediate-count shift.
  const auto* addq = isa.mnemonic_forms("addq");
  const auto* shlq = isa.mnemonic_forms("shlq");
  REQUIRE(addq);
  REQUIRE(shlq);
  int addq_rr = -1;
  for (uint16_t id : *addq)
    if (isa.opcode(id).sig[0].kind == OperandKind::Reg) addq_rr = id;
  REQUIRE(addq_rr >= 0);
  for (uint16_t member : isa.signature_class(addq_rr))
    for (uint16_t s : *shlq)
      if (isa.opcode(s).sig[0].kind == OperandKind::Imm)
        CHECK(member != s);
  // The 64-bit reg,reg class carries the two-operand 64-bit families:
  // mov + 9 ALU + imul + popcnt + 3 cmovs.
  CHECK(isa.signature_class(addq_rr).size() == 15);
}

TEST_CASE("default latencies") {
  const Isa& isa = Isa::instance();
  for (int i = 0; i < isa.num_opcodes(); ++i) {
    const Opcode& op = isa.opcode(i);
    uint32_t want = 1;
    if (op.base == "imul" || op.base == "mul") want = 3;
    if (op.base == "load" || op.base == "store") want = 4;
    CHECK(isa.default_latency(i) == want);
    CHECK(isa.default_latency(i) >= 1);
  }
}

TEST_CASE("latency table overrides by base mnemonic") {
  const Isa& isa = Isa::instance();
  LatencyTable lat(isa);
  const auto* mulq = isa.mnemonic_forms("mulq");
  REQUIRE(mulq);
  CHECK(lat.latency((*mulq)[0]) == 3);
  CHECK(lat.override_base(isa, "mul", 5));
  CHECK(lat.latency((*mulq)[0]) == 5);
  // Both widths of the base update together.
  const auto* mull = isa.mnemonic_forms("mull");
  REQUIRE(mull);
  CHECK(lat.latency((*mull)[0]) == 5);
  CHECK_FALSE(lat.override_base(isa, "nosuch", 2));
  CHECK_FALSE(lat.override_base(isa, "mul", 0));
  CHECK(lat.latency((*mulq)[0]) == 5);  // rejected override left it alone
}

TEST_CASE("constant bag contents") {
  const auto& bag = default_constant_bag();
  CHECK(bag.size() == 18);
  auto has = [&](uint64_t v) {
    return std::find(bag.begin(), bag.end(), v) != bag.end();
  };
  CHECK(has(0));
  CHECK(has(1));
  CHECK(has(63));
  CHECK(has(0xff));
  CHECK(has(0x7fffffffull));
  CHECK(has(0xffffffffull));
  CHECK(has(0x5555555555555555ull));
  CHECK(has(0x0f0f0f0f0f0f0f0full));
}

TEST_CASE("make_instruction normalizes shift counts") {
  const Isa& isa = Isa::instance();
  const auto* shlq = isa.mnemonic_forms("shlq");
  REQUIRE(shlq);
  int imm_form = -1;
  for (uint16_t id : *shlq)
    if (isa.opcode(id).sig[0].kind == OperandKind::Imm) imm_form = id;
  REQUIRE(imm_form >= 0);
  Operand ops[2] = {Operand::make_imm(200), Operand::make_reg(reg64(0))};
  Instruction ins = make_instruction(isa, imm_form, ops, 2);
  CHECK(ins.ops[0].imm == (200 & 63));
}

TEST_CASE("make_instruction truncates immediates to the operation width") {
  const Isa& isa = Isa::instance();
  const auto* addl = isa.mnemonic_forms("addl");
  REQUIRE(addl);
  int imm_form = -1;
  for (uint16_t id : *addl)
    if (isa.opcode(id).sig[0].kind == OperandKind::Imm) imm_form = id;
  REQUIRE(imm_form >= 0);
  Operand ops[2] = {Operand::make_imm(0x100000007ull),
                    Operand::make_reg(reg32(0))};
  Instruction ins = make_instruction(isa, imm_form, ops, 2);
  CHECK(ins.ops[0].imm == 7);

  // 64-bit immediates pass through whole.
  const auto* addq = isa.mnemonic_forms("addq");
  REQUIRE(addq);
  for (uint16_t id : *addq)
    if (isa.opcode(id).sig[0].kind == OperandKind::Imm) imm_form = id;
  Operand ops64[2] = {Operand::make_imm(0x5555555555555555ull),
                      Operand::make_reg(reg64(0))};
  ins = make_instruction(isa, imm_form, ops64, 2);
  CHECK(ins.ops[0].imm == 0x5555555555555555ull);
}

TEST_CASE("program capacity and active accounting") {
  Program p(5);
  CHECK(p.capacity() == 5);
  CHECK(p.active_count() == 0);
  CHECK(p.active().empty());
  p = parse_program("addq r1, r0\nmovq r0, r2\n", 5);
  CHECK(p.capacity() == 5);
  CHECK(p.active_count() == 2);
  CHECK(p.slots[2].unused());
  CHECK(p.slots[4].unused());
}

TEST_CASE("parse accepts the documented grammar") {
  Program p = parse_program(
      "# leading comment\n"
      ".L0:\n"
      "addq r1, r0   # trailing comment\n"
      "\n"
      "movl r2d, r2d\n"
      "shlb 3, r4b\n"
      "sete r5b\n"
      "movq -1, r6\n"
      "loadq 8(r6), r0\n"
      "storeq r0, (r6,r3,4)\n",
      10);
  CHECK(p.active_count() == 7);
  const Isa& isa = Isa::instance();
  CHECK(isa.opcode(p.slots[0].op).mnemonic == "addq");
  CHECK(p.slots[0].ops[0].reg == reg64(1));
  CHECK(p.slots[0].ops[1].reg == reg64(0));
  CHECK(isa.opcode(p.slots[1].op).mnemonic == "movl");
  CHECK(p.slots[3].ops[0].reg == Reg{5, 8});
  CHECK(p.slots[4].ops[0].imm == ~0ull);  // negative immediates wrap
  CHECK(p.slots[5].ops[0].kind == OperandKind::Mem);
  CHECK(p.slots[5].ops[0].mem.base == 6);
  CHECK(p.slots[5].ops[0].mem.disp == 8);
  CHECK(p.slots[5].ops[0].mem.index == -1);
  CHECK(p.slots[6].ops[1].mem.index == 3);
  CHECK(p.slots[6].ops[1].mem.scale == 4);
}

TEST_CASE("parse rejects malformed programs") {
  CHECK_THROWS_AS(parse_program("bogus r0\n", 4), ParseError);
  CHECK_THROWS_AS(parse_program("addq r1d, r0\n", 4), ParseError);  // widths
  CHECK_THROWS_AS(parse_program("addq r1, r0, r2\n", 4), ParseError);
  CHECK_THROWS_AS(parse_program("addq r99, r0\n", 4), ParseError);
  CHECK_THROWS_AS(parse_program("addq\n", 4), ParseError);
  // Capacity overflow.
  CHECK_THROWS_AS(parse_program("addq r1, r0\naddq r1, r0\n", 1), ParseError);
  // Error position is 1-based and points at the offending line.
  try {
    parse_program("addq r1, r0\nbogus r0\n", 4);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("operand mismatch error names the offending forms") {
  try {
    parse_program("addq 1, 2\n", 4);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("addq") != std::string::npos);
  }
}

TEST_CASE("format emits one line per active instruction") {
  Program p = parse_program("addq r1, r0\nshlq 63, r3\n", 6);
  CHECK(format_program(p) == "addq r1, r0\nshlq 63, r3\n");
  CHECK(format_program(Program(4)).empty());
}

TEST_CASE("parse/format round-trip on random programs") {
  const Isa& isa = Isa::instance();
  ProposalUniverse::Config cfg;
  MemRef mr;
  mr.base = 6;
  mr.disp = 8;
  cfg.mem_pool = {mr};
  ProposalUniverse u = ProposalUniverse::make(cfg, isa);
  Rng rng(2024);
  for (int iter = 0; iter < 500; ++iter) {
    Program p(8);
    // Random fill including UNUSED gaps.
    for (auto& slot : p.slots)
      if (rng.chance(0.7)) slot = u.sample_instruction(rng);
    Program back = parse_program(format_program(p, isa), p.capacity(), isa);
    CHECK(back.capacity() == p.capacity());
    // Text drops UNUSED slots, so the round-trip compacts the actives to the
    // front while preserving their order and count.
    CHECK(back.active() == p.active());
  }
}

TEST_CASE("parse_reg_token accepts views and rejects junk") {
  CHECK(parse_reg_token("r0") == reg64(0));
  CHECK(parse_reg_token("r15d") == reg32(15));
  CHECK(parse_reg_token("r7w") == reg16(7));
  CHECK(parse_reg_token("r3b") == reg8(3));
  CHECK_THROWS_AS(parse_reg_token("r16"), ParseError);
  CHECK_THROWS_AS(parse_reg_token("rax"), ParseError);
  CHECK_THROWS_AS(parse_reg_token(""), ParseError);
  CHECK_THROWS_AS(parse_reg_token("r3x"), ParseError);
}

TEST_CASE("instruction equality ignores operands of UNUSED slots") {
  Instruction a = Instruction::unused_slot();
  Instruction b = Instruction::unused_slot();
  b.ops[0] = Operand::make_imm(42);  // junk payload, still UNUSED
  CHECK(a == b);
  Program p = parse_program("addq r1, r0\n", 2);
  CHECK(p.slots[0] != a);
  CHECK(p.slots[0] == p.slots[0]);
}
