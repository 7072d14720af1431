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

#ifndef STOCHOPT_TESTGEN_HPP
#define STOCHOPT_TESTGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "stochopt/isa.hpp"
#include "stochopt/machine.hpp"
#include "stochopt/rng.hpp"

namespace stochopt {

struct MemSpan {
  uint64_t addr = 0;
  uint32_t len = 0;

  friend bool operator==(const MemSpan& a, const MemSpan& b) {
    return a.addr == b.addr && a.len == b.len;
  }
};

// Registers/memory defined on entry. Everything else starts undefined.
struct LiveInSpec {
  std::vector<Reg> regs;
  std::vector<MemSpan> mem;
};

// What equality is judged on after execution.
struct LiveOutSpec {
  std::vector<Reg> regs;
  uint8_t flags = 0;  // mask over kCF/kZF/kSF/kOF
  std::vector<MemSpan> mem;
};

// Restricts the sampled (and exhaustively enumerated) values of one live-in
// register to the inclusive range [lo, hi], interpreted at its view width.
struct RegAnnotation {
  uint8_t reg = 0;
  uint64_t lo = 0;
  uint64_t hi = 0;
};

// The optimization problem: a reference program plus its I/O contract.
struct TargetSpec {
  Program target;
  LiveInSpec live_in;
  LiveOutSpec live_out;
  std::vector<RegAnnotation> annotations;

  const RegAnnotation* annotation_for(uint8_t reg_index) const {
    for (const auto& a : annotations)
      if (a.reg == reg_index) return &a;
    return nullptr;
  }
};

// The target's observable behaviour on one input, projected onto the live-out
// sets. Definedness is part of the observation: an output bit only matches
// when both its value and its defined/undefined status agree.
struct ExpectedOut {
  struct RegVal {
    Reg reg;
    uint64_t value = 0;    // masked to the view
    uint64_t defined = 0;  // definedness bits within the view
  };
  struct MemByte {
    uint64_t addr = 0;
    uint8_t value = 0;
    bool defined = false;
  };
  std::vector<RegVal> regs;
  uint8_t flags_live = 0;     // which flags the contract observes
  uint8_t flags = 0;          // their values (masked to flags_live)
  uint8_t flags_defined = 0;  // their definedness (masked to flags_live)
  std::vector<MemByte> mem;
};

struct Testcase {
  MachineState input;
  ExpectedOut expected;
  AddrSet legal;  // addresses a candidate may dereference on this input
};

// Projects an execution outcome of the target onto the live-out contract.
ExpectedOut project_expected(const TargetSpec& spec, const MachineState& end);

// Builds the testcase for a concrete input state: derives the legal address
// set (target's own trace plus the declared spans), runs the target, records
// the expectation.
Testcase testcase_from_input(const TargetSpec& spec, MachineState input,
                             const Isa& isa = Isa::instance());

// Samples one testcase. Live-in registers get uniform values at their view
// width (annotated registers sample inside their range); live-in memory bytes
// get uniform defined values.
Testcase make_testcase(const TargetSpec& spec, Rng& rng,
                       const Isa& isa = Isa::instance());

// Generates `count` testcases. Testcase i depends only on (seed, i), so
// regenerating with a larger count extends the suite without disturbing
// earlier entries.
std::vector<Testcase> generate_testcases(const TargetSpec& spec, size_t count,
                                         uint64_t seed,
                                         const Isa& isa = Isa::instance());

// JSON (de)serialization. Round-trips exactly; readers reject files whose
// format version is newer than this build understands.
std::string testcases_to_json(const std::vector<Testcase>& tcs);
std::vector<Testcase> testcases_from_json(const std::string& text);
void save_testcases(const std::string& path, const std::vector<Testcase>& tcs);
std::vector<Testcase> load_testcases(const std::string& path);

}  // namespace stochopt

#endif  // STOCHOPT_TESTGEN_HPP
