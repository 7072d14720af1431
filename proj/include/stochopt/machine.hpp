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

#ifndef STOCHOPT_MACHINE_HPP
#define STOCHOPT_MACHINE_HPP

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "stochopt/isa.hpp"

namespace stochopt {

// ---------------------------------------------------------------------------
// Machine state with bit-level definedness.
//
// Every register bit, flag, and memory byte is either defined or undefined.
// Undefined storage always reads back as zero (the canonical encoding keeps
// value & ~defined == 0), so states compare and serialize deterministically.
// Reading an undefined source at runtime is still a fault: the sandbox counts
// it and the instruction degrades (see step below).
// ---------------------------------------------------------------------------

// Sparse byte memory holding defined bytes only; an absent address is an
// undefined zero byte.
using MemBytes = std::unordered_map<uint64_t, uint8_t>;

struct MachineState {
  std::array<uint64_t, kNumRegs> regs{};
  std::array<uint64_t, kNumRegs> reg_defined{};
  uint8_t flags = 0;          // CF/ZF/SF/OF values
  uint8_t flags_defined = 0;  // which of those bits are meaningful
  MemBytes mem;

  // Masked view read; undefined bits contribute zeros.
  uint64_t read_reg(Reg r) const {
    return regs[r.index] & width_mask(r.bits);
  }
  bool reg_all_defined(Reg r) const {
    uint64_t m = width_mask(r.bits);
    return (reg_defined[r.index] & m) == m;
  }
  uint64_t read_reg_defined(Reg r) const {
    return reg_defined[r.index] & width_mask(r.bits);
  }

  // Write through a view: 64-bit replaces, 32-bit zero-extends (upper half
  // becomes defined zero), 8/16-bit merge into the low bits.
  void write_reg(Reg r, uint64_t value) {
    uint64_t m = width_mask(r.bits);
    value &= m;
    if (r.bits >= 32) {
      regs[r.index] = value;
      reg_defined[r.index] = ~0ull;
    } else {
      regs[r.index] = (regs[r.index] & ~m) | value;
      reg_defined[r.index] |= m;
    }
  }
  // A write whose definedness is caller-controlled (testcase construction).
  void write_reg_masked(Reg r, uint64_t value, uint64_t defined) {
    uint64_t m = width_mask(r.bits);
    defined &= m;
    value &= defined;  // canonical zeros
    if (r.bits >= 32) {
      regs[r.index] = value;
      reg_defined[r.index] = defined | (r.bits == 32 ? ~m : 0ull);
    } else {
      regs[r.index] = (regs[r.index] & ~m) | value;
      reg_defined[r.index] = (reg_defined[r.index] & ~m) | defined;
    }
  }
  void mark_reg_undefined(uint8_t index) {
    regs[index] = 0;
    reg_defined[index] = 0;
  }

  bool flag_value(uint8_t flag) const { return (flags & flag) != 0; }
  bool flag_defined(uint8_t flag) const { return (flags_defined & flag) != 0; }
  void set_flag(uint8_t flag, bool v) {
    flags = v ? (flags | flag) : (flags & ~flag);
    flags_defined |= flag;
  }
  void set_flag_undefined(uint8_t flag) {
    flags &= ~flag;
    flags_defined &= ~flag;
  }

  // Byte granular memory access. Writing undefined erases the byte.
  void write_byte(uint64_t addr, uint8_t value) { mem[addr] = value; }
  void write_byte_undefined(uint64_t addr) { mem.erase(addr); }
  bool byte_defined(uint64_t addr) const { return mem.count(addr) != 0; }
  uint8_t read_byte(uint64_t addr) const {
    auto it = mem.find(addr);
    return it == mem.end() ? 0 : it->second;
  }

  friend bool operator==(const MachineState& a, const MachineState& b) {
    return a.regs == b.regs && a.reg_defined == b.reg_defined &&
           a.flags == b.flags && a.flags_defined == b.flags_defined &&
           a.mem == b.mem;
  }
  friend bool operator!=(const MachineState& a, const MachineState& b) {
    return !(a == b);
  }
};

// Addresses a program is allowed to dereference. Stored sorted for canonical
// serialization; membership by binary search (legal sets stay small).
class AddrSet {
 public:
  AddrSet() = default;
  explicit AddrSet(std::vector<uint64_t> addrs);
  void add(uint64_t addr);
  void add_span(uint64_t addr, uint64_t len);
  bool contains(uint64_t addr) const;
  bool empty() const { return addrs_.empty(); }
  size_t size() const { return addrs_.size(); }
  const std::vector<uint64_t>& sorted() const { return addrs_; }

  friend bool operator==(const AddrSet& a, const AddrSet& b) {
    return a.addrs_ == b.addrs_;
  }

 private:
  std::vector<uint64_t> addrs_;
};

// Fault counters plus the address policy for one execution.
//   sigsegv  dereference of an address outside `legal`
//   sigfloat reserved for faulting arithmetic; no roster opcode raises it
//            today, so it stays zero (kept for cost/report interface
//            stability)
//   undef    a source read (register span, flag, or memory byte) that was not
//            fully defined
struct Sandbox {
  const AddrSet* legal = nullptr;  // nullptr: every address is legal
  uint64_t sigsegv = 0;
  uint64_t sigfloat = 0;
  uint64_t undef = 0;

  bool address_legal(uint64_t addr) const {
    return legal == nullptr || legal->contains(addr);
  }
  uint64_t total_faults() const { return sigsegv + sigfloat + undef; }
};

struct Outcome {
  MachineState state;
  uint64_t sigsegv = 0;
  uint64_t sigfloat = 0;
  uint64_t undef = 0;
};

// Executes one instruction in place. UNUSED slots are no-ops. Faults never
// abort: the faulting instruction instead writes constant zero (defined) to
// its register destination(s) at operation width, performs no memory write to
// illegal addresses, and leaves flags untouched; counters record what
// happened. Deterministic for identical inputs.
void step_inplace(const Instruction& ins, MachineState& s, Sandbox& sb,
                  const Isa& isa = Isa::instance());

// Pure single-step: returns the successor state, counters accumulate into sb.
MachineState step(const Instruction& ins, const MachineState& s, Sandbox& sb,
                  const Isa& isa = Isa::instance());

// Runs the whole program from s0 under the sandbox's address policy.
Outcome execute(const Program& p, const MachineState& s0,
                const AddrSet* legal, const Isa& isa = Isa::instance());

// Collects every address the program dereferences (reads and writes) when run
// from s0 under a permissive sandbox. Used to derive legal address sets for
// testcases.
AddrSet record_trace(const Program& p, const MachineState& s0,
                     const Isa& isa = Isa::instance());

}  // namespace stochopt

#endif  // STOCHOPT_MACHINE_HPP
