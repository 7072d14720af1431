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

#include "stochopt/testgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "stochopt/asm_text.hpp"

namespace stochopt {

ExpectedOut project_expected(const TargetSpec& spec, const MachineState& end) {
  ExpectedOut out;
  out.regs.reserve(spec.live_out.regs.size());
  for (Reg r : spec.live_out.regs) {
    ExpectedOut::RegVal rv;
    rv.reg = r;
    rv.value = end.read_reg(r);
    rv.defined = end.read_reg_defined(r);
    out.regs.push_back(rv);
  }
  out.flags_live = spec.live_out.flags;
  out.flags = end.flags & spec.live_out.flags;
  out.flags_defined = end.flags_defined & spec.live_out.flags;
  for (const auto& span : spec.live_out.mem) {
    for (uint64_t i = 0; i < span.len; ++i) {
      uint64_t addr = span.addr + i;
      out.mem.push_back(ExpectedOut::MemByte{addr, end.read_byte(addr),
                                             end.byte_defined(addr)});
    }
  }
  return out;
}

Testcase testcase_from_input(const TargetSpec& spec, MachineState input,
                             const Isa& isa) {
  Testcase tc;
  tc.legal = record_trace(spec.target, input, isa);
  for (const auto& span : spec.live_in.mem)
    tc.legal.add_span(span.addr, span.len);
  for (const auto& span : spec.live_out.mem)
    tc.legal.add_span(span.addr, span.len);
  Outcome run = execute(spec.target, input, &tc.legal, isa);
  tc.expected = project_expected(spec, run.state);
  tc.input = std::move(input);
  return tc;
}

Testcase make_testcase(const TargetSpec& spec, Rng& rng, const Isa& isa) {
  MachineState input;
  for (Reg r : spec.live_in.regs) {
    uint64_t value;
    if (const RegAnnotation* a = spec.annotation_for(r.index)) {
      value = a->lo + rng.below(a->hi - a->lo + 1);
    } else {
      value = rng.next() & width_mask(r.bits);
    }
    input.write_reg(r, value);
  }
  for (const auto& span : spec.live_in.mem)
    for (uint64_t i = 0; i < span.len; ++i)
      input.write_byte(span.addr + i, static_cast<uint8_t>(rng.next() & 0xff));
  return testcase_from_input(spec, std::move(input), isa);
}

std::vector<Testcase> generate_testcases(const TargetSpec& spec, size_t count,
                                         uint64_t seed, const Isa& isa) {
  std::vector<Testcase> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    Testcase tc = make_testcase(spec, rng, isa);
    // The target must run cleanly on every generated input; a fault here
    // means the live-in declarations or annotations do not cover what the
    // target actually reads, and every candidate would then be judged
    // against a faulty expectation.
    Outcome run = execute(spec.target, tc.input, &tc.legal, isa);
    if (run.counters.sigsegv != 0 || run.counters.undef != 0) {
      std::ostringstream msg;
      msg << "testcase generation: target faulted on sampled input #" << i
          << " (sigsegv=" << run.counters.sigsegv
          << ", undef=" << run.counters.undef
          << "); declare the inputs it reads or widen their annotations";
      throw std::runtime_error(msg.str());
    }
    out.push_back(std::move(tc));
  }
  return out;
}

// --------------------------- JSON serialization ---------------------------

namespace {

using nlohmann::json;

constexpr int kTestcaseFormatVersion = 1;
constexpr const char* kTestcaseSchema = "stochopt-testcases";

std::string hex64(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t parse_u64(const json& j, const char* what) {
  if (j.is_number_unsigned()) return j.get<uint64_t>();
  if (j.is_string()) {
    const std::string& s = j.get_ref<const std::string&>();
    try {
      return std::stoull(s, nullptr, 0);
    } catch (const std::exception&) {
      // fall through
    }
  }
  throw std::runtime_error(std::string("testcase file: bad number for ") +
                           what);
}

// Keys appear for flags in `live`; null marks a live flag that is undefined.
json flags_to_json(uint8_t values, uint8_t defined, uint8_t live) {
  json j = json::object();
  const std::pair<uint8_t, const char*> table[] = {
      {kCF, "cf"}, {kZF, "zf"}, {kSF, "sf"}, {kOF, "of"}};
  for (auto [bit, name] : table) {
    if (!(live & bit)) continue;
    if (defined & bit)
      j[name] = (values & bit) ? 1 : 0;
    else
      j[name] = nullptr;
  }
  return j;
}

void flags_from_json(const json& j, uint8_t& values, uint8_t& defined,
                     uint8_t* live) {
  values = 0;
  defined = 0;
  if (live != nullptr) *live = 0;
  if (j.is_null()) return;
  const std::pair<uint8_t, const char*> table[] = {
      {kCF, "cf"}, {kZF, "zf"}, {kSF, "sf"}, {kOF, "of"}};
  for (auto [bit, name] : table) {
    auto it = j.find(name);
    if (it == j.end()) continue;
    if (live != nullptr) *live |= bit;
    if (it->is_null()) continue;
    defined |= bit;
    if (parse_u64(*it, name) != 0) values |= bit;
  }
}

// Sorted address list -> [addr, len] runs.
json spans_to_json(const std::vector<uint64_t>& sorted) {
  json out = json::array();
  size_t i = 0;
  while (i < sorted.size()) {
    uint64_t start = sorted[i];
    uint64_t len = 1;
    while (i + len < sorted.size() && sorted[i + len] == start + len) ++len;
    out.push_back(json::array({hex64(start), len}));
    i += len;
  }
  return out;
}

json testcase_to_json(const Testcase& tc) {
  json j;
  json regs = json::array(), defined = json::array();
  for (int i = 0; i < kNumRegs; ++i) {
    regs.push_back(hex64(tc.input.regs[static_cast<size_t>(i)]));
    defined.push_back(hex64(tc.input.reg_defined[static_cast<size_t>(i)]));
  }
  j["regs"] = std::move(regs);
  j["regs_defined"] = std::move(defined);
  j["flags"] =
      flags_to_json(tc.input.flags, tc.input.flags_defined, kAllFlags);

  std::vector<uint64_t> addrs;
  addrs.reserve(tc.input.mem.size());
  for (const auto& [addr, _] : tc.input.mem) addrs.push_back(addr);
  std::sort(addrs.begin(), addrs.end());
  json mem = json::array();
  for (uint64_t a : addrs)
    mem.push_back(json::array({hex64(a), tc.input.read_byte(a)}));
  j["mem"] = std::move(mem);

  json exp;
  json eregs = json::array();
  for (const auto& rv : tc.expected.regs)
    eregs.push_back(json::array(
        {reg_name(rv.reg), hex64(rv.value), hex64(rv.defined)}));
  exp["regs"] = std::move(eregs);
  exp["flags"] = flags_to_json(tc.expected.flags, tc.expected.flags_defined,
                               tc.expected.flags_live);
  json emem = json::array();
  for (const auto& mb : tc.expected.mem) {
    if (mb.defined)
      emem.push_back(json::array({hex64(mb.addr), mb.value}));
    else
      emem.push_back(json::array({hex64(mb.addr), nullptr}));
  }
  exp["mem"] = std::move(emem);
  j["expected"] = std::move(exp);

  j["legal"] = spans_to_json(tc.legal.sorted());
  return j;
}

Testcase testcase_from_json(const json& j) {
  Testcase tc;
  const json& regs = j.at("regs");
  const json& defined = j.at("regs_defined");
  if (regs.size() != kNumRegs || defined.size() != kNumRegs)
    throw std::runtime_error("testcase file: expected 16 register values");
  for (int i = 0; i < kNumRegs; ++i) {
    uint64_t d = parse_u64(defined[static_cast<size_t>(i)], "regs_defined");
    uint64_t v = parse_u64(regs[static_cast<size_t>(i)], "regs") & d;
    tc.input.regs[static_cast<size_t>(i)] = v;
    tc.input.reg_defined[static_cast<size_t>(i)] = d;
  }
  flags_from_json(j.value("flags", json()), tc.input.flags,
                  tc.input.flags_defined, nullptr);
  for (const auto& cell : j.value("mem", json::array()))
    tc.input.write_byte(parse_u64(cell.at(0), "mem addr"),
                        static_cast<uint8_t>(parse_u64(cell.at(1), "mem byte")));

  const json& exp = j.at("expected");
  for (const auto& rv : exp.value("regs", json::array())) {
    ExpectedOut::RegVal out;
    out.reg = parse_reg_token(rv.at(0).get<std::string>());
    out.defined = parse_u64(rv.at(2), "expected reg defined") &
                  width_mask(out.reg.bits);
    out.value = parse_u64(rv.at(1), "expected reg value") & out.defined;
    tc.expected.regs.push_back(out);
  }
  flags_from_json(exp.value("flags", json()), tc.expected.flags,
                  tc.expected.flags_defined, &tc.expected.flags_live);
  for (const auto& mb : exp.value("mem", json::array())) {
    ExpectedOut::MemByte out;
    out.addr = parse_u64(mb.at(0), "expected mem addr");
    if (mb.at(1).is_null()) {
      out.defined = false;
    } else {
      out.defined = true;
      out.value = static_cast<uint8_t>(parse_u64(mb.at(1), "expected mem byte"));
    }
    tc.expected.mem.push_back(out);
  }

  for (const auto& span : j.value("legal", json::array())) {
    uint64_t addr = parse_u64(span.at(0), "legal addr");
    uint64_t len = parse_u64(span.at(1), "legal len");
    tc.legal.add_span(addr, len);
  }
  return tc;
}

}  // namespace

std::string testcases_to_json(const std::vector<Testcase>& tcs) {
  json j;
  j["schema"] = kTestcaseSchema;
  j["version"] = kTestcaseFormatVersion;
  json arr = json::array();
  for (const auto& tc : tcs) arr.push_back(testcase_to_json(tc));
  j["testcases"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::vector<Testcase> testcases_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("testcase file: ") + e.what());
  }
  if (j.value("schema", "") != kTestcaseSchema)
    throw std::runtime_error("testcase file: missing or wrong schema tag");
  int version = j.value("version", -1);
  if (version < 0)
    throw std::runtime_error("testcase file: missing version");
  if (version > kTestcaseFormatVersion)
    throw std::runtime_error(
        "testcase file: format version " + std::to_string(version) +
        " is newer than this build supports (" +
        std::to_string(kTestcaseFormatVersion) + ")");
  std::vector<Testcase> out;
  for (const auto& tc : j.at("testcases")) out.push_back(testcase_from_json(tc));
  return out;
}

void save_testcases(const std::string& path, const std::vector<Testcase>& tcs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << testcases_to_json(tcs);
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<Testcase> load_testcases(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return testcases_from_json(ss.str());
}

}  // namespace stochopt
