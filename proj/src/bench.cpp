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

#include "stochopt/bench.hpp"

namespace stochopt {

namespace {

Reg r64(uint8_t i) { return Reg{i, 64}; }
Reg r32(uint8_t i) { return Reg{i, 32}; }

JobConfig base_job(std::string name, size_t capacity) {
  JobConfig job;
  job.name = std::move(name);
  job.capacity = capacity;
  job.testcase_count = 32;
  job.testcase_seed = 7;
  job.search.synthesis_workers = 2;
  job.search.optimization_workers = 2;
  job.search.epoch = 2048;
  job.search.master_seed = 1;
  return job;
}

void set_budgets(JobConfig& job, uint64_t synth, uint64_t opt) {
  job.search.synthesis_budget = Budget{synth, 0};
  job.search.optimization_budget = Budget{opt, 0};
}

// doubling: smoke kernel; r0 * 2 through a copy and an add.
BenchKernel make_double() {
  BenchKernel k;
  k.name = "double";
  k.description = "double a 64-bit value";
  JobConfig& job = k.job = base_job(k.name, 8);
  job.target_text =
      "movq r0, r1\n"
      "addq r1, r0\n";
  k.golden_text = "shlq 1, r0\n";
  job.live_in_regs = {r64(0)};
  job.live_out_regs = {r64(0)};
  job.universe_mnemonics = {"movq", "addq", "shlq"};
  job.universe_registers = {"r0", "r1"};
  set_budgets(job, 1'000'000, 1'000'000);
  return k;
}

// p18: is a 32-bit value zero or a power of two. Translation keeps the C
// shape: t = x & (x-1); result = (x != 0) & (t == 0).
BenchKernel make_p18() {
  BenchKernel k;
  k.name = "p18";
  k.description = "power-of-two test";
  JobConfig& job = k.job = base_job(k.name, 8);
  job.target_text =
      "movl r0d, r1d\n"
      "subl 1, r1d\n"
      "andl r0d, r1d\n"
      "movl 0, r2d\n"
      "testl r0d, r0d\n"
      "setne r2b\n"
      "movl 0, r3d\n"
      "testl r1d, r1d\n"
      "sete r3b\n"
      "andl r3d, r2d\n"
      "movl r2d, r0d\n";
  // Powers of two have exactly one set bit; zero maps to the x==0 case
  // falling out of cmp 1.
  k.golden_text =
      "movl 0, r1d\n"
      "popcntl r0d, r0d\n"
      "cmpl 1, r0d\n"
      "sete r1b\n"
      "movl r1d, r0d\n";
  job.live_in_regs = {r32(0)};
  job.live_out_regs = {r32(0)};
  // Inputs pinned to one byte so generation and exhaustive verification
  // cover the identical domain, including every power of two in it.
  job.annotations = {RegAnnotation{0, 0, 255}};
  job.universe_mnemonics = {"movl", "subl", "addl", "andl",   "xorl", "negl",
                            "testl", "cmpl", "sete", "setne", "popcntl"};
  job.universe_registers = {"r0", "r1", "r2", "r3"};
  set_budgets(job, 10'000'000, 1'000'000);
  return k;
}

// p21: cycle a value through <a, b, c>. The branch-free source form
// ((-(x==c)) & (a^c)) ^ ((-(x==a)) & (b^c)) ^ c transcribed literally.
// x=r0d a=r1d b=r2d c=r3d.
BenchKernel make_p21() {
  BenchKernel k;
  k.name = "p21";
  k.description = "cycle through three values";
  JobConfig& job = k.job = base_job(k.name, 6);
  job.target_text =
      "movl 0, r4d\n"
      "cmpl r3d, r0d\n"
      "sete r4b\n"
      "negl r4d\n"
      "movl r1d, r5d\n"
      "xorl r3d, r5d\n"
      "andl r5d, r4d\n"
      "movl 0, r6d\n"
      "cmpl r1d, r0d\n"
      "sete r6b\n"
      "negl r6d\n"
      "movl r2d, r7d\n"
      "xorl r3d, r7d\n"
      "andl r7d, r6d\n"
      "xorl r6d, r4d\n"
      "xorl r3d, r4d\n"
      "movl r4d, r0d\n";
  // Conditional-move form: c then a-if-x==c then b-if-x==a.
  k.golden_text =
      "cmpl r3d, r0d\n"
      "cmovel r1d, r3d\n"
      "xorl r0d, r1d\n"
      "cmovel r2d, r3d\n"
      "movl r3d, r0d\n";
  job.live_in_regs = {r32(0), r32(1), r32(2), r32(3)};
  job.live_out_regs = {r32(0)};
  // 3-bit input ranges make the x==a / x==c collisions that define the
  // kernel common in a 32-case suite (p ~ 1/8 each) instead of vanishing,
  // and keep the four-register exhaustive sweep at 8^4 = 4096 inputs.
  job.annotations = {RegAnnotation{0, 0, 7}, RegAnnotation{1, 0, 7},
                     RegAnnotation{2, 0, 7}, RegAnnotation{3, 0, 7}};
  // With 3-bit values the worst per-register Hamming distance is 3, so the
  // misplacement credit has to sit below that for the relaxed metric to be
  // a genuinely different signal from the strict one.
  job.cost.w_m = 1;
  // This kernel's route to the conditional-move form walks long plateaus of
  // equal-cost intermediates; a cold chain (high beta) holds those basins
  // instead of diffusing back out through the rare uphill exits.
  job.moves.beta = 1.0;
  job.search.master_seed = 4;
  job.universe_mnemonics = {"movl", "cmpl",   "testl",   "xorl", "orl",
                            "andl", "negl",   "sete",    "setne",
                            "cmovel", "cmovnel"};
  job.universe_registers = {"r0", "r1", "r2", "r3", "r4"};
  set_budgets(job, 10'000'000, 1'000'000);
  return k;
}

// p22: parity of a 32-bit value via the xor-shift cascade, masked to the
// parity bit.
BenchKernel make_p22() {
  BenchKernel k;
  k.name = "p22";
  k.description = "parity";
  JobConfig& job = k.job = base_job(k.name, 6);
  job.target_text =
      "movl r0d, r1d\n"
      "sarl 1, r1d\n"
      "xorl r1d, r0d\n"
      "movl r0d, r1d\n"
      "sarl 2, r1d\n"
      "xorl r1d, r0d\n"
      "movl r0d, r1d\n"
      "sarl 4, r1d\n"
      "xorl r1d, r0d\n"
      "movl r0d, r1d\n"
      "sarl 8, r1d\n"
      "xorl r1d, r0d\n"
      "movl r0d, r1d\n"
      "sarl 16, r1d\n"
      "xorl r1d, r0d\n"
      "andl 1, r0d\n";
  k.golden_text =
      "popcntl r0d, r0d\n"
      "andl 1, r0d\n";
  job.live_in_regs = {r32(0)};
  job.live_out_regs = {r32(0)};
  job.universe_mnemonics = {"movl", "sarl", "shrl", "xorl", "andl", "popcntl"};
  job.universe_registers = {"r0", "r1"};
  set_budgets(job, 10'000'000, 1'000'000);
  return k;
}

// p23: population count of a 32-bit value, divide-and-conquer form.
BenchKernel make_p23() {
  BenchKernel k;
  k.name = "p23";
  k.description = "population count";
  JobConfig& job = k.job = base_job(k.name, 6);
  job.target_text =
      "movl r0d, r1d\n"
      "shrl 1, r1d\n"
      "andl 0x55555555, r1d\n"
      "subl r1d, r0d\n"
      "movl r0d, r1d\n"
      "shrl 2, r1d\n"
      "andl 0x33333333, r0d\n"
      "andl 0x33333333, r1d\n"
      "addl r1d, r0d\n"
      "movl r0d, r1d\n"
      "shrl 4, r1d\n"
      "addl r1d, r0d\n"
      "andl 0x0f0f0f0f, r0d\n"
      "movl r0d, r1d\n"
      "shrl 8, r1d\n"
      "addl r1d, r0d\n"
      "movl r0d, r1d\n"
      "shrl 16, r1d\n"
      "addl r1d, r0d\n"
      "andl 0x3f, r0d\n";
  k.golden_text = "popcntl r0d, r0d\n";
  job.live_in_regs = {r32(0)};
  job.live_out_regs = {r32(0)};
  job.universe_mnemonics = {"movl", "shrl", "andl", "subl", "addl", "popcntl"};
  job.universe_registers = {"r0", "r1"};
  set_budgets(job, 10'000'000, 1'000'000);
  return k;
}

// p25: high 32 bits of the unsigned product of two 32-bit values, computed
// in 16-bit pieces the way a word-sized machine would.
BenchKernel make_p25() {
  BenchKernel k;
  k.name = "p25";
  k.description = "high half of 32x32 product";
  JobConfig& job = k.job = base_job(k.name, 6);
  job.target_text =
      "movl r0d, r2d\n"
      "andl 0xffff, r2d\n"
      "movl r0d, r3d\n"
      "shrl 16, r3d\n"
      "movl r1d, r4d\n"
      "andl 0xffff, r4d\n"
      "movl r1d, r5d\n"
      "shrl 16, r5d\n"
      "movl r2d, r6d\n"
      "imull r4d, r6d\n"
      "movl r3d, r7d\n"
      "imull r4d, r7d\n"
      "shrl 16, r6d\n"
      "addl r6d, r7d\n"
      "movl r7d, r8d\n"
      "andl 0xffff, r8d\n"
      "shrl 16, r7d\n"
      "movl r2d, r6d\n"
      "imull r5d, r6d\n"
      "addl r6d, r8d\n"
      "movl r3d, r6d\n"
      "imull r5d, r6d\n"
      "addl r7d, r6d\n"
      "shrl 16, r8d\n"
      "addl r8d, r6d\n"
      "movl r6d, r0d\n";
  // The inputs arrive zero-extended, so one 64-bit multiply holds the whole
  // product and a shift exposes its upper half.
  k.golden_text =
      "imulq r1, r0\n"
      "shrq 32, r0\n";
  job.live_in_regs = {r32(0), r32(1)};
  job.live_out_regs = {r32(0)};
  job.universe_mnemonics = {"movl", "movq", "andl", "shrl",  "shrq",
                            "imull", "imulq", "addl", "addq", "mulq"};
  job.universe_registers = {"r0", "r1", "r2"};
  set_budgets(job, 10'000'000, 1'000'000);
  return k;
}

// Widening multiply-accumulate in the style of bignum inner loops: a 64-bit
// multiplier times a value assembled from two 32-bit halves, plus two 64-bit
// addends, producing a 128-bit result in a register pair. The target builds
// the product from four 32x32 partial products; the golden form uses one
// widening multiply. a=r1, w=(r3d<<32)|r4d, addends r5 r6; out r0 (low),
// r2 (high).
BenchKernel make_montgomery() {
  BenchKernel k;
  k.name = "montmul";
  k.description = "widening multiply-accumulate";
  JobConfig& job = k.job = base_job(k.name, 12);
  job.target_text =
      "movq r3, r7\n"
      "shlq 32, r7\n"
      "orq r4, r7\n"
      "movq r1, r8\n"
      "andl 0xffffffff, r8d\n"
      "movq r1, r9\n"
      "shrq 32, r9\n"
      "movq r7, r10\n"
      "andl 0xffffffff, r10d\n"
      "movq r7, r11\n"
      "shrq 32, r11\n"
      "movq r8, r12\n"
      "imulq r10, r12\n"
      "movq r8, r13\n"
      "imulq r11, r13\n"
      "movq r9, r14\n"
      "imulq r10, r14\n"
      "imulq r11, r9\n"
      "addq r14, r13\n"
      "movq 0, r14\n"
      "adcq 0, r14\n"
      "shlq 32, r14\n"
      "addq r14, r9\n"
      "movq r13, r14\n"
      "shrq 32, r14\n"
      "addq r14, r9\n"
      "shlq 32, r13\n"
      "movq r12, r0\n"
      "addq r13, r0\n"
      "adcq 0, r9\n"
      "addq r5, r0\n"
      "adcq 0, r9\n"
      "addq r6, r0\n"
      "adcq 0, r9\n"
      "movq r9, r2\n";
  k.golden_text =
      "movq r3, r0\n"
      "shlq 32, r0\n"
      "orq r4, r0\n"
      "mulq r1\n"
      "addq r5, r6\n"
      "adcq 0, r2\n"
      "addq r6, r0\n"
      "adcq 0, r2\n";
  job.live_in_regs = {r64(1), r32(3), r32(4), r64(5), r64(6)};
  job.live_out_regs = {r64(0), r64(2)};
  job.universe_mnemonics = {"movq", "shlq", "shrq", "orq",  "xorq", "andl",
                            "addq", "adcq", "mulq", "imulq"};
  job.universe_registers = {"r0", "r1", "r2", "r3", "r4", "r5", "r6"};
  // Five live-in registers: exhaustive verification sweeps 4 bits of each.
  job.verify.width_cap = 4;
  set_budgets(job, 200'000, 1'000'000);
  return k;
}

// Round up to the next power of two: decrement, smear the bits right, then
// increment. No materially shorter form is known in this instruction set;
// the golden equals the target.
BenchKernel make_roundpow2() {
  BenchKernel k;
  k.name = "roundpow2";
  k.description = "round up to a power of two";
  k.expected_synthesis_timeout = true;
  JobConfig& job = k.job = base_job(k.name, 8);
  job.target_text =
      "subl 1, r0d\n"
      "movl r0d, r1d\n"
      "shrl 1, r1d\n"
      "orl r1d, r0d\n"
      "movl r0d, r1d\n"
      "shrl 2, r1d\n"
      "orl r1d, r0d\n"
      "movl r0d, r1d\n"
      "shrl 4, r1d\n"
      "orl r1d, r0d\n"
      "movl r0d, r1d\n"
      "shrl 8, r1d\n"
      "orl r1d, r0d\n"
      "movl r0d, r1d\n"
      "shrl 16, r1d\n"
      "orl r1d, r0d\n"
      "addl 1, r0d\n";
  k.golden_text = job.target_text;
  job.live_in_regs = {r32(0)};
  job.live_out_regs = {r32(0)};
  job.universe_mnemonics = {"movl", "shrl", "shll", "orl",  "andl", "xorl",
                            "subl", "addl", "negl", "popcntl"};
  job.universe_registers = {"r0", "r1", "r2"};
  set_budgets(job, 1'000'000, 500'000);
  return k;
}

// Next higher value with the same population count. The division by the
// lowest set bit becomes a variable shift whose count is recovered with a
// popcount over the low-bit mask.
BenchKernel make_snoob() {
  BenchKernel k;
  k.name = "snoob";
  k.description = "next value with equal popcount";
  k.expected_synthesis_timeout = true;
  JobConfig& job = k.job = base_job(k.name, 8);
  job.target_text =
      "movl r0d, r1d\n"
      "negl r1d\n"
      "andl r0d, r1d\n"
      "movl r0d, r2d\n"
      "addl r1d, r2d\n"
      "movl r0d, r3d\n"
      "xorl r2d, r3d\n"
      "shrl 2, r3d\n"
      "subl 1, r1d\n"
      "popcntl r1d, r1d\n"
      "shrl r1b, r3d\n"
      "orl r3d, r2d\n"
      "movl r2d, r0d\n";
  k.golden_text = job.target_text;
  job.live_in_regs = {r32(0)};
  job.live_out_regs = {r32(0)};
  job.universe_mnemonics = {"movl", "negl", "andl",  "addl", "xorl",
                            "shrl", "subl", "popcntl", "orl"};
  job.universe_registers = {"r0", "r1", "r2", "r3"};
  set_budgets(job, 500'000, 500'000);
  return k;
}

// Exchange the masked field between two registers: one shared xor-difference
// applied to both sides. x=r0d y=r1d mask=r2d; both outputs live.
BenchKernel make_xfields() {
  BenchKernel k;
  k.name = "xfields";
  k.description = "exchange masked fields";
  k.expected_synthesis_timeout = true;
  JobConfig& job = k.job = base_job(k.name, 8);
  job.target_text =
      "movl r0d, r3d\n"
      "xorl r1d, r3d\n"
      "andl r2d, r3d\n"
      "xorl r3d, r0d\n"
      "xorl r3d, r1d\n";
  k.golden_text = job.target_text;
  job.live_in_regs = {r32(0), r32(1), r32(2)};
  job.live_out_regs = {r32(0), r32(1)};
  job.universe_mnemonics = {"movl", "xorl", "andl", "orl", "notl"};
  job.universe_registers = {"r0", "r1", "r2", "r3"};
  // Three live-in registers; six bits each keeps the sweep comfortable.
  job.verify.width_cap = 6;
  set_budgets(job, 500'000, 500'000);
  return k;
}

}  // namespace

const std::vector<BenchKernel>& bench_corpus() {
  static const std::vector<BenchKernel>* corpus = [] {
    auto* v = new std::vector<BenchKernel>();
    v->push_back(make_double());
    v->push_back(make_p18());
    v->push_back(make_p21());
    v->push_back(make_p22());
    v->push_back(make_p23());
    v->push_back(make_p25());
    v->push_back(make_montgomery());
    v->push_back(make_roundpow2());
    v->push_back(make_snoob());
    v->push_back(make_xfields());
    return v;
  }();
  return *corpus;
}

const BenchKernel* find_kernel(const std::string& name) {
  for (const BenchKernel& k : bench_corpus())
    if (k.name == name) return &k;
  return nullptr;
}

}  // namespace stochopt
