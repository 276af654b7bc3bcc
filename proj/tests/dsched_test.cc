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

#include "detspace/dsched.h"

#include <gtest/gtest.h>

#include "detspace/io_log.h"
#include "detspace/kernel.h"

namespace detspace {
namespace {

// Three workers each add 1 to COUNT 200 times under mutex M.
constexpr std::string_view kCounter = R"(
.equ M, 0x20000000
.equ COUNT, 0x20000010
start:
  LI r5, 0
  LI r6, 3
spawn_loop:
  LI r1, worker
  MOV r2, r5
  JAL r15, thread_spawn
  LI r7, 1
  ADD r5, r5, r7
  BNE r5, r6, spawn_loop
  LI r5, 0
join_loop:
  JAL r15, join_any
  LI r7, 1
  ADD r5, r5, r7
  BNE r5, r6, join_loop
  LI r3, COUNT
  LD r1, 0(r3)
  JAL r0, thread_exit
worker:
  LI r5, 0
  LI r6, 200
wloop:
  LI r1, M
  JAL r15, mutex_lock
  LI r3, COUNT
  LD r4, 0(r3)
  LI r7, 1
  ADD r4, r4, r7
  ST r4, 0(r3)
  LI r1, M
  JAL r15, mutex_unlock
  LI r7, 1
  ADD r5, r5, r7
  BNE r5, r6, wloop
  LI r1, 0
  JAL r0, thread_exit
)";

// Unprotected increments running in the same rounds: a data race,
// reported as a conflict.
constexpr std::string_view kRacy = R"(
.equ COUNT, 0x20000010
start:
  LI r1, worker
  LI r2, 0
  JAL r15, thread_spawn
  LI r1, worker
  JAL r15, thread_spawn
  JAL r15, join_any
  JAL r15, join_any
  LI r1, 0
  JAL r0, thread_exit
worker:
  LI r3, COUNT
  LI r5, 3000
  LI r7, 1
wl:
  LD r4, 0(r3)
  ADD r4, r4, r7
  ST r4, 0(r3)
  SUB r5, r5, r7
  BNE r5, r0, wl
  LI r1, 0
  JAL r0, thread_exit
)";

// Waiter i yields i times, then waits on CV. The main thread signals once,
// then broadcasts. Each waiter appends its argument to ORDER on wake-up.
constexpr std::string_view kCondOrder = R"(
.equ M, 0x20000000
.equ CV, 0x20000020
.equ NEXT, 0x20000030
.equ ORDER, 0x20000040
start:
  LI r1, waiter
  LI r2, 1
  JAL r15, thread_spawn
  LI r1, waiter
  LI r2, 2
  JAL r15, thread_spawn
  LI r1, waiter
  LI r2, 3
  JAL r15, thread_spawn
  LI r5, 6
  JAL r15, yield_n
  LI r1, CV
  JAL r15, cond_signal
  LI r5, 3
  JAL r15, yield_n
  LI r1, CV
  JAL r15, cond_broadcast
  JAL r15, join_any
  JAL r15, join_any
  JAL r15, join_any
  LI r3, ORDER
  LD r1, 0(r3)
  LD r4, 4(r3)
  LI r7, 16
  MUL r4, r4, r7
  ADD r1, r1, r4
  LD r4, 8(r3)
  LI r7, 256
  MUL r4, r4, r7
  ADD r1, r1, r4
  JAL r0, thread_exit
; r5 = count; keeps r15 in r9
yield_n:
  MOV r9, r15
yloop:
  BEQ r5, r0, ydone
  JAL r15, sched_yield
  LI r7, 1
  SUB r5, r5, r7
  JAL r0, yloop
ydone:
  JR r9
waiter:
  MOV r8, r1
  MOV r5, r1
  JAL r15, yield_n
  LI r1, M
  JAL r15, mutex_lock
  LI r1, CV
  LI r2, M
  JAL r15, cond_wait
  LI r3, NEXT
  LD r4, 0(r3)
  LI r7, 4
  MUL r6, r4, r7
  LI r7, ORDER
  ADD r6, r6, r7
  ST r8, 0(r6)
  LI r7, 1
  ADD r4, r4, r7
  ST r4, 0(r3)
  LI r1, M
  JAL r15, mutex_unlock
  LI r1, 0
  JAL r0, thread_exit
)";

// A long and a short worker; join_any returns the short one first.
constexpr std::string_view kJoinAny = R"(
start:
  LI r1, worker
  LI r2, 3000
  JAL r15, thread_spawn
  MOV r8, r1
  LI r1, worker
  LI r2, 100
  JAL r15, thread_spawn
  JAL r15, join_any
  MOV r9, r1
  JAL r15, join_any
  LI r7, 10
  MUL r9, r9, r7
  ADD r1, r9, r1
  JAL r0, thread_exit
worker:
  LI r7, 1
wl:
  SUB r1, r1, r7
  BNE r1, r0, wl
  LI r1, 0
  JAL r0, thread_exit
)";

constexpr std::string_view kDeadlock = R"(
.equ M, 0x20000000
start:
  LI r1, M
  JAL r15, mutex_lock
  LI r1, worker
  LI r2, 0
  JAL r15, thread_spawn
  JAL r15, join_any
  LI r1, 0
  JAL r0, thread_exit
worker:
  LI r1, M
  JAL r15, mutex_lock
  LI r1, 0
  JAL r0, thread_exit
)";

// One thread taking and releasing its own mutex many times.
constexpr std::string_view kSolo = R"(
.equ M, 0x20000000
start:
  LI r5, 0
  LI r6, 500
loop:
  LI r1, M
  JAL r15, mutex_lock
  LI r1, M
  JAL r15, mutex_unlock
  LI r7, 1
  ADD r5, r5, r7
  BNE r5, r6, loop
  LI r1, msg
  LI r2, 3
  JAL r15, sched_print
  LI r1, 7
  JAL r0, thread_exit
msg: .ascii "ok\n"
)";

ProgramTable make_table() {
  ProgramTable t;
  add_runtime_programs(t);
  add_dsched_runner(t);
  std::string prelude(dsched_prelude());
  t.add_vm_source("counter", std::string(kCounter) + prelude);
  t.add_vm_source("racy", std::string(kRacy) + prelude);
  t.add_vm_source("condorder", std::string(kCondOrder) + prelude);
  t.add_vm_source("joinany", std::string(kJoinAny) + prelude);
  t.add_vm_source("deadlock", std::string(kDeadlock) + prelude);
  t.add_vm_source("solo", std::string(kSolo) + prelude);
  return t;
}

const ProgramTable& table() {
  static const ProgramTable t = make_table();
  return t;
}

struct SchedRun {
  RunResult result;
  uint32_t code = 0;
  std::string trace;
  std::string console;
};

SchedRun run_sched(const std::string& program, uint64_t quantum, KernelConfig cfg = {},
              std::function<void(const AuditEvent&)> audit = nullptr) {
  InputLog log;
  log.add(dev::kArgs, args_record({"dsched", program, std::to_string(quantum)}));
  cfg.audit = std::move(audit);
  Kernel k(cfg, table());
  SchedRun r;
  r.result = k.run("init", log);
  r.code = r.result.exit_code;
  r.console = r.result.output.collect(dev::kConsoleOut);
  FsImage fs = FsImage::parse(r.result.output.collect(dev::kFsDump), layout::kFsDefaultSize);
  fs.read("/trace/dsched.log", r.trace);
  return r;
}

KernelConfig parallel(uint64_t seed) {
  KernelConfig cfg;
  cfg.executor = ExecutorKind::kParallel;
  cfg.workers = 3;
  cfg.seed = seed;
  cfg.max_slice = 29;
  return cfg;
}

TEST(Dsched, PreludeAssembles) {
  ProgramTable t;
  const ProgramInfo& p = t.add_vm_source("p", "start: HALT\n" + std::string(dsched_prelude()));
  EXPECT_TRUE(p.vm->symbols.count("mutex_lock_fast_begin"));
  EXPECT_TRUE(p.vm->symbols.count("mutex_unlock_fast_end"));
}

TEST(Dsched, MutexCounterIsExactForEveryQuantum) {
  for (uint64_t q : {13u, 100u, 1000u, 1000000u}) {
    SchedRun r = run_sched("counter", q);
    EXPECT_EQ(r.code, 600u) << "quantum " << q << "\n" << r.console;
  }
}

TEST(Dsched, TraceIsIdenticalAcrossRunsAndExecutors) {
  SchedRun first = run_sched("counter", 97);
  ASSERT_FALSE(first.trace.empty());
  for (uint64_t seed = 0; seed < 4; ++seed) {
    SchedRun again = seed ? run_sched("counter", 97, parallel(seed)) : run_sched("counter", 97);
    EXPECT_EQ(again.trace, first.trace) << "seed " << seed;
    EXPECT_EQ(again.result.output, first.result.output);
  }
}

TEST(Dsched, TraceDependsOnQuantum) {
  EXPECT_NE(run_sched("counter", 97).trace, run_sched("counter", 211).trace);
}

TEST(Dsched, RaceIsAConflict) {
  SchedRun r = run_sched("racy", 1000);
  EXPECT_EQ(r.code, 125u);
  EXPECT_NE(r.console.find("write/write conflict at 0x20000010"), std::string::npos) << r.console;
}

TEST(Dsched, CondvarWakesEarliestWaiterFirst) {
  // Waiters with arguments 1, 2, 3 enqueue in that virtual-time order.
  SchedRun r = run_sched("condorder", 1000);
  EXPECT_EQ(r.code, 1u + 16u * 2u + 256u * 3u) << r.trace;
  SchedRun p = run_sched("condorder", 1000, parallel(5));
  EXPECT_EQ(p.trace, r.trace);
}

TEST(Dsched, JoinAnyReturnsEarliestFinisher) {
  // tids: long worker 1, short worker 2.
  SchedRun r = run_sched("joinany", 50);
  EXPECT_EQ(r.code, 21u) << r.trace;
}

TEST(Dsched, DeadlockIsReported) {
  SchedRun r = run_sched("deadlock", 1000);
  EXPECT_EQ(r.code, 124u);
  EXPECT_NE(r.trace.find("deadlock"), std::string::npos);
}

TEST(Dsched, OwnerFastPathNeedsNoScheduler) {
  uint64_t rets = 0;
  SchedRun r = run_sched("solo", 1000000, {}, [&](const AuditEvent& e) {
    if (e.call == Call::kRet) ++rets;
  });
  EXPECT_EQ(r.code, 7u);
  EXPECT_EQ(r.console, "ok\n");
  // First ownership and the print are the only requests; the rest is the
  // exit, the job's exit and nothing per iteration.
  EXPECT_EQ(r.trace,
            "0 0 lock 0x20000000\n0 0 acquire 0x20000000\n1 0 print 0x3\n2 0 exit 0x7\n");
  EXPECT_LE(rets, 4u);
}

}  // namespace
}  // namespace detspace
