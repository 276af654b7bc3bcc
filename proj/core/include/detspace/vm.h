// Copyright 2026 The detspace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

#include "detspace/isa.h"
#include "detspace/memimg.h"

namespace detspace {

enum class TrapKind : uint8_t {
  kNone = 0,
  kDivideByZero = 1,
  kAccessFault = 2,
  kIllegalInstruction = 3,
};

const char* to_string(TrapKind k);

enum class VmStop : uint8_t { kBudget, kSyscall, kTrap, kHalt };

struct VmResult {
  uint64_t steps = 0;
  VmStop stop = VmStop::kBudget;
  TrapKind trap = TrapKind::kNone;
  uint32_t fault_addr = 0;
};

// Executes at most `budget` instructions. SYS and HALT count as one step and
// leave pc at the following instruction; a trapping instruction counts as a
// step and leaves pc at itself.
VmResult run_until(RegisterFile& regs, MemoryImage& mem, uint64_t budget);

inline VmResult step(RegisterFile& regs, MemoryImage& mem) {
  return run_until(regs, mem, 1);
}

}  // namespace detspace
