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

#ifndef STOCHOPT_ISA_HPP
#define STOCHOPT_ISA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stochopt {

// ---------------------------------------------------------------------------
// Registers.
//
// 16 general-purpose 64-bit registers r0..r15 with narrower views:
//   rN  = 64-bit   rNd = low 32   rNw = low 16   rNb = low 8
// Writes through a 32-bit view zero the upper half (and define it); writes
// through 8/16-bit views merge into the low bits and leave the rest alone.
// ---------------------------------------------------------------------------

inline constexpr int kNumRegs = 16;

struct Reg {
  uint8_t index = 0;  // 0..15
  uint8_t bits = 64;  // view width: 8, 16, 32, or 64

  friend bool operator==(const Reg& a, const Reg& b) {
    return a.index == b.index && a.bits == b.bits;
  }
  friend bool operator!=(const Reg& a, const Reg& b) { return !(a == b); }
};

inline constexpr Reg reg64(uint8_t i) { return Reg{i, 64}; }
inline constexpr Reg reg32(uint8_t i) { return Reg{i, 32}; }
inline constexpr Reg reg16(uint8_t i) { return Reg{i, 16}; }
inline constexpr Reg reg8(uint8_t i) { return Reg{i, 8}; }

// Mask selecting the bits of a view within the 64-bit register.
inline constexpr uint64_t width_mask(uint8_t bits) {
  return bits >= 64 ? ~0ull : ((1ull << bits) - 1);
}

std::string reg_name(Reg r);

// ---------------------------------------------------------------------------
// Operands.
// ---------------------------------------------------------------------------

enum class OperandKind : uint8_t { Reg, Imm, Mem };

// base + index*scale + disp addressing. index < 0 means no index register.
struct MemRef {
  uint8_t base = 0;
  int8_t index = -1;
  uint8_t scale = 1;  // 1, 2, 4, or 8
  int32_t disp = 0;

  friend bool operator==(const MemRef& a, const MemRef& b) {
    return a.base == b.base && a.index == b.index && a.scale == b.scale &&
           a.disp == b.disp;
  }
  friend bool operator!=(const MemRef& a, const MemRef& b) { return !(a == b); }
};

struct Operand {
  OperandKind kind = OperandKind::Reg;
  union {
    Reg reg;
    uint64_t imm;
    MemRef mem;
  };

  Operand() : reg{} {}
  static Operand make_reg(Reg r) {
    Operand o;
    o.kind = OperandKind::Reg;
    o.reg = r;
    return o;
  }
  static Operand make_imm(uint64_t v) {
    Operand o;
    o.kind = OperandKind::Imm;
    o.imm = v;
    return o;
  }
  static Operand make_mem(MemRef m) {
    Operand o;
    o.kind = OperandKind::Mem;
    o.mem = m;
    return o;
  }

  friend bool operator==(const Operand& a, const Operand& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case OperandKind::Reg: return a.reg == b.reg;
      case OperandKind::Imm: return a.imm == b.imm;
      case OperandKind::Mem: return a.mem == b.mem;
    }
    return false;
  }
  friend bool operator!=(const Operand& a, const Operand& b) {
    return !(a == b);
  }
};

// ---------------------------------------------------------------------------
// Opcodes.
// ---------------------------------------------------------------------------

// Semantic family. The emulator dispatches on this; the roster instantiates
// each family at its legal widths and operand forms.
enum class Sem : uint8_t {
  Mov, Add, Adc, Sub, Sbb, Neg, Not, And, Or, Xor, Cmp, Test,
  Shl, Shr, Sar, Imul, MulWide, Popcnt, SetCc, CmovCc, Load, Store,
};

enum class Cond : uint8_t { None, E, Ne, B, Ae };

// Flag bits (condition codes). Tri-state at runtime: value + defined.
inline constexpr uint8_t kCF = 1 << 0;
inline constexpr uint8_t kZF = 1 << 1;
inline constexpr uint8_t kSF = 1 << 2;
inline constexpr uint8_t kOF = 1 << 3;
inline constexpr uint8_t kAllFlags = kCF | kZF | kSF | kOF;

// One slot of an opcode signature. For Reg slots bits is the view width, for
// Mem slots the access width; Imm slots always carry a 64-bit value (shift
// counts are masked to 0..63 when the instruction is built).
struct SigSlot {
  OperandKind kind = OperandKind::Reg;
  uint8_t bits = 64;

  friend bool operator==(const SigSlot& a, const SigSlot& b) {
    return a.kind == b.kind && a.bits == b.bits;
  }
};

struct Opcode {
  uint16_t id = 0;
  std::string mnemonic;  // full spelling, e.g. "addq", "cmovel", "sete"
  std::string base;      // latency-table key, e.g. "add", "cmove", "sete"
  Sem sem = Sem::Mov;
  Cond cond = Cond::None;
  uint8_t bits = 64;  // operation width
  std::vector<SigSlot> sig;

  // Static flag behaviour. Shifts deviate at runtime (a masked count of zero
  // touches nothing; OF is defined only for count == 1): these masks are the
  // count >= 1 case.
  uint8_t reads_flags = 0;
  uint8_t writes_flags = 0;   // flags given defined values
  uint8_t undefs_flags = 0;   // flags forced undefined

  // True if execution reads / writes the operand at that position (memory
  // address registers count as reads of the Mem operand).
  std::array<bool, 2> reads_op{{false, false}};
  std::array<bool, 2> writes_op{{false, false}};

  int arity() const { return static_cast<int>(sig.size()); }
};

// ---------------------------------------------------------------------------
// Instructions and programs.
// ---------------------------------------------------------------------------

// A slot in a candidate program: either UNUSED or a concrete instruction.
// op < 0 encodes UNUSED. At most two operands across the whole roster.
struct Instruction {
  int16_t op = -1;
  uint8_t nops = 0;
  std::array<Operand, 2> ops{};

  bool unused() const { return op < 0; }
  static Instruction unused_slot() { return Instruction{}; }

  friend bool operator==(const Instruction& a, const Instruction& b) {
    if (a.op != b.op) return false;
    if (a.op < 0) return true;
    if (a.nops != b.nops) return false;
    for (int i = 0; i < a.nops; ++i)
      if (a.ops[i] != b.ops[i]) return false;
    return true;
  }
  friend bool operator!=(const Instruction& a, const Instruction& b) {
    return !(a == b);
  }
};

// Fixed-capacity straight-line program. Capacity never changes; UNUSED slots
// are skipped by execution and by the text formatter.
struct Program {
  std::vector<Instruction> slots;

  Program() = default;
  explicit Program(size_t capacity) : slots(capacity) {}

  size_t capacity() const { return slots.size(); }
  size_t active_count() const {
    size_t n = 0;
    for (const auto& s : slots)
      if (!s.unused()) ++n;
    return n;
  }
  std::vector<Instruction> active() const {
    std::vector<Instruction> out;
    out.reserve(slots.size());
    for (const auto& s : slots)
      if (!s.unused()) out.push_back(s);
    return out;
  }

  friend bool operator==(const Program& a, const Program& b) {
    return a.slots == b.slots;
  }
  friend bool operator!=(const Program& a, const Program& b) {
    return !(a == b);
  }
};

// ---------------------------------------------------------------------------
// The instruction set table.
// ---------------------------------------------------------------------------

class Isa {
 public:
  // The one shipped roster. Built once, immutable afterwards.
  static const Isa& instance();

  const std::vector<Opcode>& opcodes() const { return opcodes_; }
  const Opcode& opcode(int id) const { return opcodes_[static_cast<size_t>(id)]; }
  int num_opcodes() const { return static_cast<int>(opcodes_.size()); }

  // Opcodes sharing a mnemonic spelling (same mnemonic, different operand
  // forms, e.g. "addq r1, r0" vs "addq 7, r0").
  const std::vector<uint16_t>* mnemonic_forms(std::string_view mnemonic) const;

  // Signature equivalence class: all opcodes whose signature (slot kinds and
  // widths, in order) matches. Includes the opcode itself. Classes partition
  // the roster.
  const std::vector<uint16_t>& signature_class(int opcode_id) const {
    return classes_[class_of_[static_cast<size_t>(opcode_id)]];
  }
  int class_id(int opcode_id) const {
    return class_of_[static_cast<size_t>(opcode_id)];
  }
  int num_classes() const { return static_cast<int>(classes_.size()); }

  // Default latency (cycles) per opcode. Always >= 1.
  uint32_t default_latency(int opcode_id) const {
    return default_latency_[static_cast<size_t>(opcode_id)];
  }

 private:
  Isa();
  std::vector<Opcode> opcodes_;
  std::vector<std::vector<uint16_t>> classes_;
  std::vector<int> class_of_;
  std::vector<uint32_t> default_latency_;
  // mnemonic -> opcode ids, stored sorted for binary search
  std::vector<std::pair<std::string, std::vector<uint16_t>>> by_mnemonic_;
};

// Per-opcode latency weights for the performance heuristic. Starts from the
// roster defaults; individual base mnemonics can be overridden.
class LatencyTable {
 public:
  explicit LatencyTable(const Isa& isa);
  uint32_t latency(int opcode_id) const {
    return cycles_[static_cast<size_t>(opcode_id)];
  }
  // Returns false if no opcode has this base mnemonic or cycles == 0.
  bool override_base(const Isa& isa, std::string_view base, uint32_t cycles);

 private:
  std::vector<uint32_t> cycles_;
};

// Baseline constant bag offered at immediate slots. Jobs extend it with the
// immediates found in the target (and any user-supplied starting rewrite).
const std::vector<uint64_t>& default_constant_bag();

// Builds an instruction, normalizing it (shift-count immediates masked to
// 0..63). Asserts the operands match the opcode signature.
Instruction make_instruction(const Isa& isa, int opcode_id,
                             const Operand* operands, int count);

}  // namespace stochopt

#endif  // STOCHOPT_ISA_HPP
