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

#include "detspace/vm.h"

#include <gtest/gtest.h>

#include "detspace/assembler.h"
#include "testutil.h"

namespace detspace {
namespace {

constexpr uint32_t kData = 0x200000;

struct Machine {
  RegisterFile regs;
  MemoryImage mem;
  explicit Machine(const std::string& src) {
    AsmProgram p = assemble(src);
    mem.zero_range(p.base, (p.code.size() + kPageSize) & ~uint64_t(kPageSize - 1));
    mem.write(p.base, p.code);
    mem.zero_range(kData, kPageSize);
    regs.pc = p.entry;
  }
};

const char* kLoop =
    "start: LI r2, 0x200000\n"
    "loop:  LD r1, 0(r2)\n"
    "       LI r3, 3\n"
    "       ADD r1, r1, r3\n"
    "       ST r1, 0(r2)\n"
    "       STB r1, 9(r2)\n"
    "       LI r4, 1\n"
    "       ADD r5, r5, r4\n"
    "       MUL r6, r5, r5\n"
    "       XOR r7, r6, r1\n"
    "       BEQ r0, r0, loop\n";

TEST(Vm, AddAfterTwoSteps) {
  Machine m("LI r1, 7\nADD r1, r1, r1\nHALT\n");
  VmResult r = run_until(m.regs, m.mem, 2);
  EXPECT_EQ(r.steps, 2u);
  EXPECT_EQ(r.stop, VmStop::kBudget);
  EXPECT_EQ(m.regs.get(1), 14u);
  r = run_until(m.regs, m.mem, 5);
  EXPECT_EQ(r.steps, 1u);
  EXPECT_EQ(r.stop, VmStop::kHalt);
}

TEST(Vm, StoreToReadOnlyTrapsAndCounts) {
  Machine m("LI r2, 0x200000\nST r1, 0(r2)\nHALT\n");
  m.mem.set_perms(kData, kPageSize, Perm::kRead);
  VmResult r = run_until(m.regs, m.mem, 100);
  EXPECT_EQ(r.stop, VmStop::kTrap);
  EXPECT_EQ(r.trap, TrapKind::kAccessFault);
  EXPECT_EQ(r.fault_addr, kData);
  EXPECT_EQ(r.steps, 2u);
  EXPECT_EQ(m.regs.pc, layout::kCodeBase + 8);  // at the faulting store
}

TEST(Vm, LoadFromNoneAndUnmappedFaults) {
  Machine m("LI r2, 0x200000\nLD r1, 0(r2)\n");
  m.mem.set_perms(kData, kPageSize, Perm::kNone);
  EXPECT_EQ(run_until(m.regs, m.mem, 10).trap, TrapKind::kAccessFault);
  Machine u("LI r2, 0x900000\nLDB r1, 3(r2)\n");
  VmResult r = run_until(u.regs, u.mem, 10);
  EXPECT_EQ(r.trap, TrapKind::kAccessFault);
  EXPECT_EQ(r.fault_addr, 0x900003u);
}

TEST(Vm, DivideByZeroTraps) {
  Machine m("LI r1, 10\nDIVU r3, r1, r2\n");
  VmResult r = run_until(m.regs, m.mem, 10);
  EXPECT_EQ(r.trap, TrapKind::kDivideByZero);
  EXPECT_EQ(r.steps, 2u);
}

TEST(Vm, IllegalInstructionTraps) {
  Machine m(".word 0\n");
  EXPECT_EQ(run_until(m.regs, m.mem, 1).trap, TrapKind::kIllegalInstruction);
}

TEST(Vm, RegisterZeroIgnoresWrites) {
  Machine m("LI r0, 5\nADD r1, r0, r0\nHALT\n");
  run_until(m.regs, m.mem, 10);
  EXPECT_EQ(m.regs.get(0), 0u);
  EXPECT_EQ(m.regs.get(1), 0u);
}

TEST(Vm, CallAndReturn) {
  Machine m("start: JAL ra, f\nHALT\nf: LI r1, 9\nJR ra\n");
  VmResult r = run_until(m.regs, m.mem, 10);
  EXPECT_EQ(r.stop, VmStop::kHalt);
  EXPECT_EQ(r.steps, 4u);
  EXPECT_EQ(m.regs.get(1), 9u);
}

TEST(Vm, SysStopsAfterInstruction) {
  Machine m("LI r1, 2\nSYS\nHALT\n");
  VmResult r = run_until(m.regs, m.mem, 10);
  EXPECT_EQ(r.stop, VmStop::kSyscall);
  EXPECT_EQ(r.steps, 2u);
  EXPECT_EQ(m.regs.pc, layout::kCodeBase + 12);
}

TEST(Vm, ZeroBudgetRunsNothing) {
  Machine m(kLoop);
  VmResult r = run_until(m.regs, m.mem, 0);
  EXPECT_EQ(r.steps, 0u);
  EXPECT_EQ(r.stop, VmStop::kBudget);
}

TEST(Vm, BudgetStopsMidIteration) {
  Machine m(kLoop);
  VmResult r = run_until(m.regs, m.mem, 25);
  EXPECT_EQ(r.steps, 25u);
  EXPECT_EQ(r.stop, VmStop::kBudget);
}

// Oracle: one uninterrupted run.
TEST(Vm, SplitBudgetEqualsSingleRun) {
  for (uint64_t k : {1u, 7u, 25u, 333u}) {
    Machine a(kLoop), b(kLoop);
    run_until(a.regs, a.mem, k);
    run_until(a.regs, a.mem, 50 + k);
    run_until(b.regs, b.mem, 50 + 2 * k);
    EXPECT_EQ(a.regs, b.regs);
    EXPECT_EQ(testing::bytes_of(a.mem, kData, kPageSize), testing::bytes_of(b.mem, kData, kPageSize));
  }
}

TEST(Vm, CrossPageAccess) {
  Machine m("LI r2, 0x200ffe\nLI r1, 0x11223344\nST r1, 0(r2)\nLD r3, 0(r2)\nHALT\n");
  m.mem.zero_range(kData + kPageSize, kPageSize);
  run_until(m.regs, m.mem, 10);
  EXPECT_EQ(m.regs.get(3), 0x11223344u);
  EXPECT_EQ(*m.mem.byte_at(kData + kPageSize + 1), 0x11);
}

TEST(Vm, WritesRespectCopyOnWrite) {
  Machine m("LI r2, 0x200000\nLI r1, 77\nST r1, 0(r2)\nHALT\n");
  MemoryImage before = m.mem;
  run_until(m.regs, m.mem, 10);
  EXPECT_EQ(*m.mem.byte_at(kData), 77);
  EXPECT_EQ(*before.byte_at(kData), 0);
}

}  // namespace
}  // namespace detspace
