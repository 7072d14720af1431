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

#include "stochopt/asm_text.hpp"

#include <cctype>
#include <cstdio>
#include <vector>

namespace stochopt {

namespace {

std::string position_message(int line, int col, const std::string& message) {
  if (line <= 0) return message;
  return "line " + std::to_string(line) + ", col " + std::to_string(col) +
         ": " + message;
}

}  // namespace

ParseError::ParseError(int line, int col, const std::string& message)
    : std::runtime_error(position_message(line, col, message)),
      line_(line),
      col_(col) {}

namespace {

struct Cursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1;

  int col() const {
    size_t begin = text.substr(0, pos).rfind('\n');
    size_t line_start = begin == std::string_view::npos ? 0 : begin + 1;
    return static_cast<int>(pos - line_start) + 1;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line, col(), msg);
  }

  bool at_end() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r'))
      ++pos;
  }
};

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

Reg parse_reg_inner(std::string_view token, int line, int col) {
  auto fail = [&](const std::string& msg) -> Reg {
    throw ParseError(line, col, msg);
  };
  if (token.size() < 2 || token[0] != 'r')
    return fail("expected register, got '" + std::string(token) + "'");
  uint8_t bits = 64;
  switch (token.back()) {
    case 'd': bits = 32; token.remove_suffix(1); break;
    case 'w': bits = 16; token.remove_suffix(1); break;
    case 'b': bits = 8; token.remove_suffix(1); break;
    default: break;
  }
  token.remove_prefix(1);
  if (token.empty() || token.size() > 2)
    return fail("bad register name");
  int index = 0;
  for (char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      return fail("bad register name");
    index = index * 10 + (c - '0');
  }
  if (index >= kNumRegs)
    return fail("register index out of range (r0..r15)");
  return Reg{static_cast<uint8_t>(index), bits};
}

uint64_t parse_number(Cursor& c) {
  bool neg = false;
  if (!c.at_end() && (c.peek() == '-' || c.peek() == '+')) {
    neg = c.peek() == '-';
    ++c.pos;
  }
  if (c.at_end() || !std::isdigit(static_cast<unsigned char>(c.peek())))
    c.fail("expected number");
  uint64_t value = 0;
  if (c.peek() == '0' && c.pos + 1 < c.text.size() &&
      (c.text[c.pos + 1] == 'x' || c.text[c.pos + 1] == 'X')) {
    c.pos += 2;
    size_t digits = 0;
    while (!c.at_end() &&
           std::isxdigit(static_cast<unsigned char>(c.peek()))) {
      char ch = c.peek();
      uint64_t d = std::isdigit(static_cast<unsigned char>(ch))
                       ? static_cast<uint64_t>(ch - '0')
                       : static_cast<uint64_t>(std::tolower(ch) - 'a' + 10);
      value = (value << 4) | d;
      ++c.pos;
      ++digits;
    }
    if (digits == 0) c.fail("expected hex digits after 0x");
  } else {
    while (!c.at_end() && std::isdigit(static_cast<unsigned char>(c.peek()))) {
      value = value * 10 + static_cast<uint64_t>(c.peek() - '0');
      ++c.pos;
    }
  }
  return neg ? (0 - value) : value;
}

Operand parse_memory(Cursor& c, int64_t disp_in) {
  // At '(' now. base [, index [, scale]] ')'
  MemRef m;
  m.disp = static_cast<int32_t>(disp_in);
  ++c.pos;  // '('
  c.skip_spaces();
  int base_col = c.col();
  size_t start = c.pos;
  while (!c.at_end() && ident_char(c.peek())) ++c.pos;
  Reg base = parse_reg_inner(c.text.substr(start, c.pos - start), c.line,
                             base_col);
  if (base.bits != 64) c.fail("memory base must be a 64-bit register");
  m.base = base.index;
  c.skip_spaces();
  if (!c.at_end() && c.peek() == ',') {
    ++c.pos;
    c.skip_spaces();
    int index_col = c.col();
    start = c.pos;
    while (!c.at_end() && ident_char(c.peek())) ++c.pos;
    Reg index = parse_reg_inner(c.text.substr(start, c.pos - start), c.line,
                                index_col);
    if (index.bits != 64) c.fail("memory index must be a 64-bit register");
    m.index = static_cast<int8_t>(index.index);
    c.skip_spaces();
    if (c.at_end() || c.peek() != ',') c.fail("expected ',scale' after index");
    ++c.pos;
    c.skip_spaces();
    uint64_t scale = parse_number(c);
    if (scale != 1 && scale != 2 && scale != 4 && scale != 8)
      c.fail("scale must be 1, 2, 4, or 8");
    m.scale = static_cast<uint8_t>(scale);
  }
  c.skip_spaces();
  if (c.at_end() || c.peek() != ')') c.fail("expected ')'");
  ++c.pos;
  return Operand::make_mem(m);
}

Operand parse_operand(Cursor& c) {
  c.skip_spaces();
  if (c.at_end()) c.fail("expected operand");
  char ch = c.peek();
  if (ch == '(') return parse_memory(c, 0);
  if (ch == '-' || ch == '+' || std::isdigit(static_cast<unsigned char>(ch))) {
    uint64_t value = parse_number(c);
    c.skip_spaces();
    if (!c.at_end() && c.peek() == '(')
      return parse_memory(c, static_cast<int64_t>(value));
    return Operand::make_imm(value);
  }
  int col = c.col();
  size_t start = c.pos;
  while (!c.at_end() && ident_char(c.peek())) ++c.pos;
  if (c.pos == start) c.fail("expected operand");
  Reg r = parse_reg_inner(c.text.substr(start, c.pos - start), c.line, col);
  return Operand::make_reg(r);
}

const char* kind_name(OperandKind k) {
  switch (k) {
    case OperandKind::Reg: return "register";
    case OperandKind::Imm: return "immediate";
    case OperandKind::Mem: return "memory";
  }
  return "?";
}

bool operand_matches(const Operand& o, const SigSlot& slot) {
  if (o.kind != slot.kind) return false;
  if (o.kind == OperandKind::Reg) return o.reg.bits == slot.bits;
  return true;
}

}  // namespace

Reg parse_reg_token(std::string_view token) {
  return parse_reg_inner(token, 0, 0);
}

Program parse_program(std::string_view text, size_t capacity, const Isa& isa) {
  std::vector<Instruction> parsed;
  Cursor c{text};

  while (!c.at_end()) {
    c.skip_spaces();
    if (c.at_end()) break;
    if (c.peek() == '\n') {
      ++c.pos;
      ++c.line;
      continue;
    }
    if (c.peek() == '#' || c.peek() == '.') {
      // Comment or label/directive line: skip to end of line.
      while (!c.at_end() && c.peek() != '\n') ++c.pos;
      continue;
    }

    int mn_col = c.col();
    size_t start = c.pos;
    while (!c.at_end() && ident_char(c.peek())) ++c.pos;
    std::string mnemonic(c.text.substr(start, c.pos - start));
    if (mnemonic.empty()) c.fail("expected mnemonic");

    const std::vector<uint16_t>* forms = isa.mnemonic_forms(mnemonic);
    if (forms == nullptr)
      throw ParseError(c.line, mn_col, "unknown mnemonic '" + mnemonic + "'");

    std::vector<Operand> operands;
    c.skip_spaces();
    if (!c.at_end() && c.peek() != '\n' && c.peek() != '#') {
      operands.push_back(parse_operand(c));
      c.skip_spaces();
      while (!c.at_end() && c.peek() == ',') {
        ++c.pos;
        operands.push_back(parse_operand(c));
        c.skip_spaces();
      }
    }
    if (!c.at_end() && c.peek() == '#')
      while (!c.at_end() && c.peek() != '\n') ++c.pos;
    if (!c.at_end() && c.peek() != '\n') c.fail("trailing junk after operands");

    const Opcode* match = nullptr;
    for (uint16_t id : *forms) {
      const Opcode& op = isa.opcode(id);
      if (op.arity() != static_cast<int>(operands.size())) continue;
      bool ok = true;
      for (size_t i = 0; i < operands.size(); ++i)
        if (!operand_matches(operands[i], op.sig[i])) ok = false;
      if (ok) {
        match = &op;
        break;
      }
    }
    if (match == nullptr) {
      std::string got;
      for (const Operand& o : operands) {
        if (!got.empty()) got += ", ";
        got += kind_name(o.kind);
        if (o.kind == OperandKind::Reg)
          got += std::to_string(unsigned(o.reg.bits));
      }
      throw ParseError(c.line, mn_col,
                       "operands (" + got + ") do not match any form of '" +
                           mnemonic + "'");
    }

    parsed.push_back(make_instruction(isa, match->id, operands.data(),
                                      static_cast<int>(operands.size())));
    if (parsed.size() > capacity)
      throw ParseError(c.line, mn_col,
                       "program exceeds capacity of " +
                           std::to_string(capacity) + " instructions");
  }

  Program p(capacity);
  for (size_t i = 0; i < parsed.size(); ++i) p.slots[i] = parsed[i];
  return p;
}

namespace {

void format_imm(std::string& out, uint64_t v) {
  if (v < 4096) {
    out += std::to_string(v);
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llx",
                  static_cast<unsigned long long>(v));
    out += buf;
  }
}

void format_operand(std::string& out, const Operand& o) {
  switch (o.kind) {
    case OperandKind::Reg:
      out += reg_name(o.reg);
      break;
    case OperandKind::Imm:
      format_imm(out, o.imm);
      break;
    case OperandKind::Mem: {
      if (o.mem.disp != 0) out += std::to_string(o.mem.disp);
      out += '(';
      out += reg_name(reg64(o.mem.base));
      if (o.mem.index >= 0) {
        out += ',';
        out += reg_name(reg64(static_cast<uint8_t>(o.mem.index)));
        out += ',';
        out += std::to_string(static_cast<int>(o.mem.scale));
      }
      out += ')';
      break;
    }
  }
}

}  // namespace

std::string format_instruction(const Instruction& ins, const Isa& isa) {
  if (ins.unused()) return std::string();
  std::string out = isa.opcode(ins.op).mnemonic;
  for (int i = 0; i < ins.nops; ++i) {
    out += i == 0 ? " " : ", ";
    format_operand(out, ins.ops[static_cast<size_t>(i)]);
  }
  return out;
}

std::string format_program(const Program& p, const Isa& isa) {
  std::string out;
  for (const auto& ins : p.slots) {
    if (ins.unused()) continue;
    out += format_instruction(ins, isa);
    out += '\n';
  }
  return out;
}

}  // namespace stochopt
