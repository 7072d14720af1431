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

#ifndef STOCHOPT_TESTS_REFERENCE_SEMANTICS_HPP
#define STOCHOPT_TESTS_REFERENCE_SEMANTICS_HPP

// Independent per-opcode reference used to cross-check the emulator.
// Deliberately written in a different style from the production code so the
// two cannot share a bug: shifts move one bit at a time, signed overflow is
// decided by 128-bit range checks instead of bit tricks, popcount is a naive
// loop. Covers the fault-free register/immediate paths; memory transfer and
// fault degradation have their own dedicated tests.

#include <cstdint>

#include "stochopt/isa.hpp"

namespace refsem {

using stochopt::Cond;
using stochopt::kAllFlags;
using stochopt::kCF;
using stochopt::kOF;
using stochopt::kSF;
using stochopt::kZF;
using stochopt::Opcode;
using stochopt::Sem;

struct RefFlags {
  uint8_t value = 0;
  uint8_t touched = 0;  // flags this instruction assigns (defined or not)
  uint8_t defined = 0;  // subset of touched given concrete values

  void set(uint8_t f, bool v) {
    touched |= f;
    defined |= f;
    if (v) value |= f;
  }
  void undefine(uint8_t f) { touched |= f; }
};

struct RefEffect {
  bool writes_dst = false;  // result goes to the destination operand
  uint64_t dst = 0;
  bool writes_pair = false;  // widening multiply: r2:r0
  uint64_t lo = 0;
  uint64_t hi = 0;
  RefFlags flags;
};

inline uint64_t ref_mask(uint8_t bits) {
  return bits >= 64 ? ~0ull : (1ull << bits) - 1;
}

inline bool ref_msb(uint64_t v, uint8_t w) { return ((v >> (w - 1)) & 1) != 0; }

inline __int128 ref_signed(uint64_t v, uint8_t w) {
  __int128 x = static_cast<__int128>(v & ref_mask(w));
  if (ref_msb(v, w)) x -= static_cast<__int128>(1) << w;
  return x;
}

inline int ref_popcount(uint64_t v) {
  int n = 0;
  for (int i = 0; i < 64; ++i)
    if ((v >> i) & 1) ++n;
  return n;
}

// Flag-free helpers shared by several families.
inline void ref_zf_sf(RefFlags& f, uint64_t r, uint8_t w) {
  f.set(kZF, (r & ref_mask(w)) == 0);
  f.set(kSF, ref_msb(r, w));
}

// src: operand 0 value, dst: operand 1 value (or the sole operand for unary
// forms), both already truncated to the operation width. flag_in: the value
// of the one flag this opcode reads (CF for adc/sbb/b/ae, ZF for e/ne).
// mul_r0: the implicit low factor for the widening multiply.
inline RefEffect ref_step(const Opcode& op, uint64_t src, uint64_t dst,
                          bool flag_in, uint64_t mul_r0) {
  const uint8_t w = op.bits;
  const uint64_t m = ref_mask(w);
  src &= m;
  dst &= m;
  RefEffect e;

  switch (op.sem) {
    case Sem::Mov:
      e.writes_dst = true;
      e.dst = src;
      break;

    case Sem::Add:
    case Sem::Adc: {
      unsigned __int128 c = (op.sem == Sem::Adc && flag_in) ? 1 : 0;
      unsigned __int128 full = static_cast<unsigned __int128>(src) + dst + c;
      uint64_t r = static_cast<uint64_t>(full) & m;
      e.writes_dst = true;
      e.dst = r;
      e.flags.set(kCF, full > m);
      __int128 sfull = ref_signed(src, w) + ref_signed(dst, w) +
                       static_cast<__int128>(c);
      e.flags.set(kOF, sfull != ref_signed(r, w));
      ref_zf_sf(e.flags, r, w);
      break;
    }

    case Sem::Sub:
    case Sem::Sbb:
    case Sem::Cmp: {
      unsigned __int128 c = (op.sem == Sem::Sbb && flag_in) ? 1 : 0;
      uint64_t r = (dst - src - static_cast<uint64_t>(c)) & m;
      e.writes_dst = op.sem != Sem::Cmp;
      e.dst = r;
      e.flags.set(kCF, static_cast<unsigned __int128>(src) + c >
                           static_cast<unsigned __int128>(dst));
      __int128 sfull = ref_signed(dst, w) - ref_signed(src, w) -
                       static_cast<__int128>(c);
      e.flags.set(kOF, sfull != ref_signed(r, w));
      ref_zf_sf(e.flags, r, w);
      break;
    }

    case Sem::Neg: {
      uint64_t r = (~src + 1) & m;
      e.writes_dst = true;
      e.dst = r;
      e.flags.set(kCF, src != 0);
      e.flags.set(kOF, -ref_signed(src, w) != ref_signed(r, w));
      ref_zf_sf(e.flags, r, w);
      break;
    }

    case Sem::Not:
      e.writes_dst = true;
      e.dst = ~src & m;
      break;

    case Sem::And:
    case Sem::Or:
    case Sem::Xor:
    case Sem::Test: {
      uint64_t r = op.sem == Sem::Or    ? (src | dst)
                   : op.sem == Sem::Xor ? (src ^ dst)
                                        : (src & dst);
      r &= m;
      e.writes_dst = op.sem != Sem::Test;
      e.dst = r;
      e.flags.set(kCF, false);
      e.flags.set(kOF, false);
      ref_zf_sf(e.flags, r, w);
      break;
    }

    case Sem::Shl:
    case Sem::Shr:
    case Sem::Sar: {
      uint64_t count = src & (w == 64 ? 63 : 31);
      if (count == 0) break;  // no write, flags untouched
      uint64_t cur = dst;
      bool cf = false;
      bool sign = ref_msb(dst, w);
      for (uint64_t k = 0; k < count; ++k) {
        if (op.sem == Sem::Shl) {
          cf = ref_msb(cur, w);
          cur = (cur << 1) & m;
        } else if (op.sem == Sem::Shr) {
          cf = (cur & 1) != 0;
          cur >>= 1;
        } else {
          cf = (cur & 1) != 0;
          cur = (cur >> 1) | (sign ? (1ull << (w - 1)) : 0);
        }
      }
      e.writes_dst = true;
      e.dst = cur;
      e.flags.set(kCF, cf);
      if (count == 1) {
        if (op.sem == Sem::Shl)
          e.flags.set(kOF, ref_msb(cur, w) != cf);
        else if (op.sem == Sem::Shr)
          e.flags.set(kOF, sign);
        else
          e.flags.set(kOF, false);
      } else {
        e.flags.undefine(kOF);
      }
      ref_zf_sf(e.flags, cur, w);
      break;
    }

    case Sem::Imul: {
      __int128 full = ref_signed(src, w) * ref_signed(dst, w);
      uint64_t r = static_cast<uint64_t>(full) & m;
      __int128 lo_min = -(static_cast<__int128>(1) << (w - 1));
      __int128 lo_max = (static_cast<__int128>(1) << (w - 1)) - 1;
      bool ovf = full < lo_min || full > lo_max;
      e.writes_dst = true;
      e.dst = r;
      e.flags.set(kCF, ovf);
      e.flags.set(kOF, ovf);
      e.flags.undefine(kZF);
      e.flags.undefine(kSF);
      break;
    }

    case Sem::MulWide: {
      unsigned __int128 full =
          static_cast<unsigned __int128>(mul_r0 & m) * (src & m);
      e.writes_pair = true;
      e.lo = static_cast<uint64_t>(full) & m;
      e.hi = static_cast<uint64_t>(full >> w) & m;
      e.flags.set(kCF, e.hi != 0);
      e.flags.set(kOF, e.hi != 0);
      e.flags.undefine(kZF);
      e.flags.undefine(kSF);
      break;
    }

    case Sem::Popcnt:
      e.writes_dst = true;
      e.dst = static_cast<uint64_t>(ref_popcount(src));
      e.flags.set(kZF, src == 0);
      e.flags.set(kCF, false);
      e.flags.set(kSF, false);
      e.flags.set(kOF, false);
      break;

    case Sem::SetCc: {
      bool taken =
          (op.cond == Cond::E || op.cond == Cond::B) ? flag_in : !flag_in;
      e.writes_dst = true;
      e.dst = taken ? 1 : 0;
      break;
    }

    case Sem::CmovCc: {
      bool taken =
          (op.cond == Cond::E || op.cond == Cond::B) ? flag_in : !flag_in;
      e.writes_dst = true;
      e.dst = taken ? src : dst;
      break;
    }

    case Sem::Load:
    case Sem::Store:
      break;  // memory transfer is oracled separately, byte by byte
  }
  return e;
}

}  // namespace refsem

#endif  // STOCHOPT_TESTS_REFERENCE_SEMANTICS_HPP
