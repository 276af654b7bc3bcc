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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "detspace/layout.h"
#include "detspace/proc.h"
#include "detspace/syscall.h"
#include "detspace/task.h"

namespace detspace {

enum class StackLayout {
  kOverlapping,  // every thread's stack sits at the master's stack address
  kDisjoint,     // stacks carved from the top of the shared region
};

enum class FsSharing {
  kExcluded,  // each thread has a private replica, reconciled at join
  kShared,    // the replica region is merged like shared memory
};

struct ThreadOptions {
  uint32_t shared_base = layout::kSharedBase;
  uint32_t shared_size = layout::kSharedSize;
  StackLayout stacks = StackLayout::kOverlapping;
  uint32_t stack_size = 0x4000;  // kDisjoint only
  FsSharing fs = FsSharing::kExcluded;
  bool spread_nodes = false;  // thread i runs on node i mod nodes
};

// Write/write race found when merging a thread's changes.
class ConflictError : public std::runtime_error {
 public:
  ConflictError(uint32_t tid, std::vector<MergeConflict> conflicts);
  uint32_t tid() const { return tid_; }
  const std::vector<MergeConflict>& conflicts() const { return conflicts_; }

 private:
  uint32_t tid_;
  std::vector<MergeConflict> conflicts_;
};

struct ThreadStop {
  StopStatus status;  // the thread's own stop, never kConflict
  RegisterFile regs;
  std::vector<MergeConflict> conflicts;
  bool exited() const { return status.reason == StopReason::kRet; }
};

// Host thread bodies signal a barrier with this.
inline SysAwaiter thread_barrier(Guest& g) { return g.ret(rt::kBarrier); }

// One child space per thread, managed from the master's control flow. A
// thread body is any registered program: a plain host function that reads
// its arguments from regs(), or a VM program. The caller's registers are
// passed through with pc and the stack pointer (r14) filled in.
class ThreadGroup {
 public:
  explicit ThreadGroup(Process& p, ThreadOptions opts = {});
  ThreadGroup(const ThreadGroup&) = delete;
  ThreadGroup& operator=(const ThreadGroup&) = delete;

  const ThreadOptions& options() const { return opts_; }
  uint32_t stack_top(uint32_t tid) const;
  bool live(uint32_t tid) const { return threads_.count(tid) != 0; }
  std::vector<uint32_t> tids() const;

  // Throws ProcError for a duplicate tid or an unknown program. `limit`
  // bounds the first run (0 = none). A nonzero regs.pc replaces the entry
  // of a VM program.
  Task<void> fork(uint32_t tid, std::string_view program, RegisterFile regs = {},
                  uint64_t limit = 0);
  // Merges the thread's changes and retires it. Conflicts are returned,
  // not thrown; see check().
  Task<ThreadStop> join(uint32_t tid);
  // Every live thread must stop with thread_barrier (or exit). Merges all
  // of them in tid order, then resumes the ones at the barrier with the
  // combined image. Exited threads are retired.
  Task<std::vector<ThreadStop>> barrier();

  // Lower level, for schedulers: restart with a fresh shared snapshot and
  // an instruction limit (0 = none), optionally replacing the registers.
  Task<void> resume(uint32_t tid, uint64_t limit = 0, const RegisterFile* regs = nullptr);
  // Waits for the thread to stop and merges its changes, without retiring.
  Task<ThreadStop> collect(uint32_t tid);
  void retire(uint32_t tid);
  // Bytes of a stopped thread's memory (at most 252 KiB).
  Task<std::string> read_memory(uint32_t tid, uint32_t addr, uint32_t len);

  static void check(uint32_t tid, const ThreadStop& s);

 private:
  struct Thread {
    uint32_t local = 0;
    uint32_t child = 0;
  };
  Task<std::vector<MergeConflict>> merge_from(uint32_t child);

  Process& p_;
  ThreadOptions opts_;
  std::map<uint32_t, Thread> threads_;
};

}  // namespace detspace
