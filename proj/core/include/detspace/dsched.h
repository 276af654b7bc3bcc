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
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "detspace/layout.h"
#include "detspace/proc.h"
#include "detspace/threads.h"

namespace detspace {

// Slow-path requests: a thread Rets rt::kSched with r10 = op, r11 = object,
// r12 = argument, and is resumed with the result in r1.
namespace sched_op {
inline constexpr uint32_t kLock = 1;
inline constexpr uint32_t kUnlock = 2;
inline constexpr uint32_t kWait = 3;       // r11 condvar, r12 mutex
inline constexpr uint32_t kSignal = 4;
inline constexpr uint32_t kBroadcast = 5;
inline constexpr uint32_t kSpawn = 6;      // r11 entry pc, r12 argument
inline constexpr uint32_t kJoinAny = 7;
inline constexpr uint32_t kPrint = 8;      // r11 address, r12 length
inline constexpr uint32_t kYield = 9;
inline constexpr uint32_t kError = 0xffffffff;
}  // namespace sched_op

// Guest mutex layout in shared memory: owner (tid + 1, 0 = none), locked,
// queued waiter count. Twelve bytes, word aligned.
inline constexpr uint32_t kMutexBytes = 12;

struct SchedOptions {
  uint64_t quantum = 0;  // 0: the run's configured quantum
  uint32_t shared_base = layout::kSharedBase;
  uint32_t shared_size = 0x10000;
  std::string trace_path = "/trace/dsched.log";  // empty: not written
  bool spread_nodes = false;
};

struct SchedEvent {
  uint64_t vt = 0;
  uint32_t tid = 0;
  std::string op;
  uint32_t obj = 0;
  std::string line() const;  // "vt tid op 0xobj"
  friend bool operator==(const SchedEvent&, const SchedEvent&) = default;
};

struct SchedResult {
  std::vector<SchedEvent> trace;
  std::map<uint32_t, StopStatus> exits;
  uint64_t rounds = 0;
  bool deadlock = false;
  std::string trace_text() const;
};

// Runs VM threads under quantized round-robin with deterministic
// synchronization. Each round every runnable thread gets up to one quantum;
// the master then merges them, serves their requests in thread order, and
// hands out mutexes in (enqueue time, tid) order. A thread preempted inside
// a `NAME_begin`..`NAME_end` region restarts at NAME_begin; each such region
// may store only with its last instruction.
class DetScheduler {
 public:
  explicit DetScheduler(Process& p, SchedOptions opts = {});
  DetScheduler(const DetScheduler&) = delete;
  DetScheduler& operator=(const DetScheduler&) = delete;

  uint64_t quantum() const { return quantum_; }
  // Queues a thread of VM `program`; r13 is set to tid + 1.
  uint32_t add(std::string_view program, RegisterFile regs = {});
  // Runs until every thread has finished or all remaining ones are blocked.
  // A write/write conflict within a round throws ConflictError.
  Task<SchedResult> run();

 private:
  enum class State { kNew, kRunnable, kRunning, kMutex, kCond, kJoin, kDone };
  struct Thread {
    State state = State::kNew;
    std::string program;
    RegisterFile regs;
    bool regs_dirty = false;
    uint64_t exit_vt = 0;
    bool joined = false;
  };
  struct Waiter {
    uint64_t vt;
    uint32_t tid;
    auto operator<=>(const Waiter&) const = default;
  };

  void event(uint32_t tid, std::string op, uint32_t obj);
  void finish_op(uint32_t tid, uint32_t result);
  bool valid_mutex(uint32_t m) const;
  void acquire(uint32_t tid, uint32_t m);
  void release(uint32_t m);
  void enqueue_mutex(uint32_t tid, uint32_t m);
  Task<void> serve(uint32_t tid);
  void grant_unlocked();
  void wake_joiners();
  const std::vector<std::pair<uint32_t, uint32_t>>& regions(const std::string& program);

  Process& p_;
  SchedOptions opts_;
  ThreadGroup group_;
  uint64_t quantum_;
  uint64_t vt_ = 0;
  std::map<uint32_t, Thread> threads_;
  std::map<uint32_t, std::set<Waiter>> mutex_waiters_;
  std::map<uint32_t, std::set<Waiter>> cond_waiters_;
  std::map<uint32_t, uint32_t> cond_mutex_;  // waiting tid -> mutex to retake
  std::set<Waiter> join_waiters_;
  std::map<std::string, std::vector<std::pair<uint32_t, uint32_t>>> regions_;
  SchedResult result_;
};

// Assembly appended to guest programs: mutex_lock/mutex_unlock (r1 =
// mutex), cond_wait (r1 = condvar, r2 = mutex), cond_signal and
// cond_broadcast (r1), thread_spawn (r1 = entry, r2 = argument; returns the
// tid), join_any, sched_print (r1 = address, r2 = length), sched_yield and
// thread_exit (r1 = code). Calls use JAL r15 and clobber r1, r2, r10-r12.
std::string_view dsched_prelude();

// Registers `dsched`: argv [dsched, program, quantum?] runs the VM program
// as thread 0 under the scheduler and writes the trace file.
void add_dsched_runner(ProgramTable& t);

}  // namespace detspace
