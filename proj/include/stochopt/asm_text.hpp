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

#ifndef STOCHOPT_ASM_TEXT_HPP
#define STOCHOPT_ASM_TEXT_HPP

#include <stdexcept>
#include <string>
#include <string_view>

#include "stochopt/isa.hpp"

namespace stochopt {

// Parse failure with 1-based source position.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& message);
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

// Parses assembly text into a fixed-capacity program.
//
// Grammar, one instruction per line:
//   mnemonic [operand {, operand}]
// with '#' starting a comment and lines beginning with '.' (labels such as
// ".L0:") ignored. Operands are source-before-destination:
//   register   r0..r15 | r0d..r15d | r0w..r15w | r0b..r15b
//   immediate  decimal or 0x hex, optionally negative
//   memory     disp(base) | disp(base,index,scale), disp optional
//
// Instructions fill the program front to back; the remaining slots are
// UNUSED. Throws ParseError on unknown mnemonics, malformed operands,
// operand/width mismatches, and when the text holds more instructions than
// `capacity`.
Program parse_program(std::string_view text, size_t capacity,
                      const Isa& isa = Isa::instance());

// Formats the active instructions, one per line (each line '\n'-terminated).
// UNUSED slots produce nothing, so format <-> parse round-trips the active
// sequence exactly.
std::string format_program(const Program& p, const Isa& isa = Isa::instance());

std::string format_instruction(const Instruction& ins,
                               const Isa& isa = Isa::instance());

// Parses a bare register token ("r3d"). Throws ParseError (line/col 0) on
// malformed names. Used by config files as well as the assembly parser.
Reg parse_reg_token(std::string_view token);

}  // namespace stochopt

#endif  // STOCHOPT_ASM_TEXT_HPP
