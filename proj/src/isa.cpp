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

#include "stochopt/isa.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <stdexcept>

namespace stochopt {

std::string reg_name(Reg r) {
  std::string name = "r" + std::to_string(r.index);
  switch (r.bits) {
    case 64: break;
    case 32: name += 'd'; break;
    case 16: name += 'w'; break;
    case 8: name += 'b'; break;
    default: name += "?"; break;
  }
  return name;
}

namespace {

char width_suffix(uint8_t bits) {
  switch (bits) {
    case 8: return 'b';
    case 16: return 'w';
    case 32: return 'l';
    case 64: return 'q';
  }
  return '?';
}

const char* cond_name(Cond c) {
  switch (c) {
    case Cond::E: return "e";
    case Cond::Ne: return "ne";
    case Cond::B: return "b";
    case Cond::Ae: return "ae";
    case Cond::None: break;
  }
  return "";
}

struct Builder {
  std::vector<Opcode> out;

  // src-before-dst operand order throughout (AT&T style).
  void add(std::string mnemonic, std::string base, Sem sem, Cond cond,
           uint8_t bits, std::vector<SigSlot> sig, uint8_t rf, uint8_t wf,
           uint8_t uf, std::array<bool, 2> reads, std::array<bool, 2> writes) {
    Opcode op;
    op.id = static_cast<uint16_t>(out.size());
    op.mnemonic = std::move(mnemonic);
    op.base = std::move(base);
    op.sem = sem;
    op.cond = cond;
    op.bits = bits;
    op.sig = std::move(sig);
    op.reads_flags = rf;
    op.writes_flags = wf;
    op.undefs_flags = uf;
    op.reads_op = reads;
    op.writes_op = writes;
    out.push_back(std::move(op));
  }
};

std::vector<Opcode> build_roster() {
  Builder b;
  const uint8_t widths[] = {8, 32, 64};

  auto rslot = [](uint8_t bits) { return SigSlot{OperandKind::Reg, bits}; };
  auto islot = [] { return SigSlot{OperandKind::Imm, 64}; };
  auto mslot = [](uint8_t bits) { return SigSlot{OperandKind::Mem, bits}; };

  for (uint8_t w : widths) {
    const char suf = width_suffix(w);
    auto mn = [&](const char* base) { return std::string(base) + suf; };

    // mov: full overwrite at width, no flags.
    b.add(mn("mov"), "mov", Sem::Mov, Cond::None, w, {rslot(w), rslot(w)}, 0, 0,
          0, {true, false}, {false, true});
    b.add(mn("mov"), "mov", Sem::Mov, Cond::None, w, {islot(), rslot(w)}, 0, 0,
          0, {true, false}, {false, true});

    // Two-operand ALU: dst = dst op src.
    struct AluForm {
      const char* base;
      Sem sem;
      uint8_t rf, wf, uf;
      bool writes_dst;
    };
    const AluForm alu[] = {
        {"add", Sem::Add, 0, kAllFlags, 0, true},
        {"adc", Sem::Adc, kCF, kAllFlags, 0, true},
        {"sub", Sem::Sub, 0, kAllFlags, 0, true},
        {"sbb", Sem::Sbb, kCF, kAllFlags, 0, true},
        {"and", Sem::And, 0, kAllFlags, 0, true},
        {"or", Sem::Or, 0, kAllFlags, 0, true},
        {"xor", Sem::Xor, 0, kAllFlags, 0, true},
        {"cmp", Sem::Cmp, 0, kAllFlags, 0, false},
        {"test", Sem::Test, 0, kAllFlags, 0, false},
    };
    for (const auto& f : alu) {
      b.add(mn(f.base), f.base, f.sem, Cond::None, w, {rslot(w), rslot(w)},
            f.rf, f.wf, f.uf, {true, true}, {false, f.writes_dst});
      b.add(mn(f.base), f.base, f.sem, Cond::None, w, {islot(), rslot(w)},
            f.rf, f.wf, f.uf, {true, true}, {false, f.writes_dst});
    }

    // One-operand: neg sets all flags, not sets none.
    b.add(mn("neg"), "neg", Sem::Neg, Cond::None, w, {rslot(w)}, 0, kAllFlags,
          0, {true, false}, {true, false});
    b.add(mn("not"), "not", Sem::Not, Cond::None, w, {rslot(w)}, 0, 0, 0,
          {true, false}, {true, false});

    // Shifts: count is an immediate or an 8-bit register view, masked to the
    // operand width's count range at execution. Flag masks describe count>=1.
    const char* shifts[] = {"shl", "shr", "sar"};
    const Sem shift_sems[] = {Sem::Shl, Sem::Shr, Sem::Sar};
    for (int i = 0; i < 3; ++i) {
      b.add(mn(shifts[i]), shifts[i], shift_sems[i], Cond::None, w,
            {islot(), rslot(w)}, 0, kCF | kZF | kSF, kOF, {true, true},
            {false, true});
      b.add(mn(shifts[i]), shifts[i], shift_sems[i], Cond::None, w,
            {rslot(8), rslot(w)}, 0, kCF | kZF | kSF, kOF, {true, true},
            {false, true});
    }

    // Memory transfer at the operation width.
    b.add(mn("load"), "load", Sem::Load, Cond::None, w, {mslot(w), rslot(w)},
          0, 0, 0, {true, false}, {false, true});
    b.add(mn("store"), "store", Sem::Store, Cond::None, w,
          {rslot(w), mslot(w)}, 0, 0, 0, {true, false}, {false, true});
  }

  // 32/64-bit only forms.
  for (uint8_t w : {uint8_t{32}, uint8_t{64}}) {
    const char suf = width_suffix(w);
    auto mn = [&](const char* base) { return std::string(base) + suf; };

    // imul: two-operand low-half signed multiply.
    b.add(mn("imul"), "imul", Sem::Imul, Cond::None, w, {rslot(w), rslot(w)},
          0, kCF | kOF, kZF | kSF, {true, true}, {false, true});
    // mul: widening unsigned multiply, implicit r2:r0 = r0 * src.
    b.add(mn("mul"), "mul", Sem::MulWide, Cond::None, w, {rslot(w)}, 0,
          kCF | kOF, kZF | kSF, {true, false}, {false, false});
    b.add(mn("popcnt"), "popcnt", Sem::Popcnt, Cond::None, w,
          {rslot(w), rslot(w)}, 0, kAllFlags, 0, {true, false}, {false, true});

    const Cond cmov_conds[] = {Cond::E, Cond::Ne, Cond::B};
    for (Cond c : cmov_conds) {
      std::string base = std::string("cmov") + cond_name(c);
      // cmov reads dst as well: a false condition re-writes the old value
      // (which still zero-extends at 32 bits).
      b.add(base + suf, base, Sem::CmovCc, c, w, {rslot(w), rslot(w)},
            c == Cond::B ? kCF : kZF, 0, 0, {true, true}, {false, true});
    }
  }

  // setcc: byte destination, no width suffix.
  const Cond set_conds[] = {Cond::E, Cond::Ne, Cond::B, Cond::Ae};
  for (Cond c : set_conds) {
    std::string base = std::string("set") + cond_name(c);
    b.add(base, base, Sem::SetCc, c, 8, {rslot(8)},
          (c == Cond::B || c == Cond::Ae) ? kCF : kZF, 0, 0, {false, false},
          {true, false});
  }

  return std::move(b.out);
}

uint32_t base_latency(const std::string& base) {
  // Static cost weights: unit for simple ALU ops, multiplies heavier, memory
  // heavier still.
  if (base == "imul" || base == "mul") return 3;
  if (base == "load" || base == "store") return 4;
  return 1;
}

}  // namespace

Isa::Isa() {
  opcodes_ = build_roster();

  class_of_.assign(opcodes_.size(), -1);
  std::map<std::vector<std::pair<int, int>>, int> sig_index;
  for (const auto& op : opcodes_) {
    std::vector<std::pair<int, int>> key;
    key.reserve(op.sig.size());
    for (const auto& s : op.sig)
      key.emplace_back(static_cast<int>(s.kind), s.bits);
    auto [it, inserted] =
        sig_index.emplace(key, static_cast<int>(classes_.size()));
    if (inserted) classes_.emplace_back();
    class_of_[op.id] = it->second;
    classes_[static_cast<size_t>(it->second)].push_back(op.id);
  }

  default_latency_.reserve(opcodes_.size());
  for (const auto& op : opcodes_)
    default_latency_.push_back(base_latency(op.base));

  std::map<std::string, std::vector<uint16_t>> mn;
  for (const auto& op : opcodes_) mn[op.mnemonic].push_back(op.id);
  by_mnemonic_.assign(mn.begin(), mn.end());
}

const Isa& Isa::instance() {
  static const Isa isa;
  return isa;
}

const std::vector<uint16_t>* Isa::mnemonic_forms(
    std::string_view mnemonic) const {
  auto it = std::lower_bound(
      by_mnemonic_.begin(), by_mnemonic_.end(), mnemonic,
      [](const auto& entry, std::string_view key) { return entry.first < key; });
  if (it == by_mnemonic_.end() || it->first != mnemonic) return nullptr;
  return &it->second;
}

LatencyTable::LatencyTable(const Isa& isa) {
  cycles_.reserve(static_cast<size_t>(isa.num_opcodes()));
  for (int i = 0; i < isa.num_opcodes(); ++i)
    cycles_.push_back(isa.default_latency(i));
}

bool LatencyTable::override_base(const Isa& isa, std::string_view base,
                                 uint32_t cycles) {
  if (cycles == 0) return false;
  bool hit = false;
  for (int i = 0; i < isa.num_opcodes(); ++i) {
    if (isa.opcode(i).base == base) {
      cycles_[static_cast<size_t>(i)] = cycles;
      hit = true;
    }
  }
  return hit;
}

const std::vector<uint64_t>& default_constant_bag() {
  static const std::vector<uint64_t> bag = {
      0, 1, 2, 4, 7, 8, 16, 31, 32, 63, 64,
      0xff, 0xffff, 0x7fffffff, 0xffffffff,
      0x5555555555555555ull, 0x3333333333333333ull, 0x0f0f0f0f0f0f0f0full,
  };
  return bag;
}

Instruction make_instruction(const Isa& isa, int opcode_id,
                             const Operand* operands, int count) {
  const Opcode& op = isa.opcode(opcode_id);
  assert(count == op.arity());
  Instruction ins;
  ins.op = static_cast<int16_t>(opcode_id);
  ins.nops = static_cast<uint8_t>(count);
  for (int i = 0; i < count; ++i) {
    assert(operands[i].kind == op.sig[static_cast<size_t>(i)].kind);
    ins.ops[static_cast<size_t>(i)] = operands[i];
    // Normalize immediates at construction so textual and sampled forms of
    // the same instruction compare equal: shift counts never exceed 63, and
    // other immediates are truncated to the operation width (x86 cannot
    // encode a wider one, and truncating here keeps carry/overflow flags
    // honest at 8/32-bit widths).
    bool is_shift = op.sem == Sem::Shl || op.sem == Sem::Shr || op.sem == Sem::Sar;
    if (operands[i].kind == OperandKind::Imm)
      ins.ops[static_cast<size_t>(i)].imm =
          is_shift ? (operands[i].imm & 63)
                   : (operands[i].imm & width_mask(op.bits));
  }
  return ins;
}

}  // namespace stochopt
