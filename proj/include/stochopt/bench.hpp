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

#ifndef STOCHOPT_BENCH_HPP
#define STOCHOPT_BENCH_HPP

#include <string>
#include <vector>

#include "stochopt/job.hpp"

namespace stochopt {

// One benchmark kernel: a deliberately verbose (no-CSE, compiler -O0 style)
// target, a known-good hand rewrite, and a tuned job configuration. The
// golden rewrite verifies proven-equal against the target under the kernel's
// verify settings; goldens equal to the target mark kernels with no known
// materially shorter form in this instruction set.
struct BenchKernel {
  std::string name;
  std::string description;
  std::string golden_text;
  bool expected_synthesis_timeout = false;
  JobConfig job;
};

const std::vector<BenchKernel>& bench_corpus();
const BenchKernel* find_kernel(const std::string& name);  // nullptr if absent

}  // namespace stochopt

#endif  // STOCHOPT_BENCH_HPP
