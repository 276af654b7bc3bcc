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

#include "detspace/threads.h"

#include <cstdio>

#include "detspace/guest.h"
#include "detspace/kernel.h"

namespace detspace {

namespace {

using namespace layout;

std::string conflict_message(uint32_t tid, const std::vector<MergeConflict>& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "thread %u: write/write conflict at 0x%08x (%zu bytes)", tid,
                c.empty() ? 0u : c.front().addr, c.size());
  return buf;
}

SysArgs copy_to(uint32_t child, uint32_t src, uint32_t dst, uint64_t len) {
  SysArgs a;
  a.child = child;
  a.options = opt::kCopy;
  a.src = src;
  a.dst = dst;
  a.len = len;
  return a;
}

void must(const SysResult& r, const char* what) {
  if (!r.ok()) throw ProcError(std::string(what) + ": " + to_string(r.err));
}

}  // namespace

ConflictError::ConflictError(uint32_t tid, std::vector<MergeConflict> conflicts)
    : std::runtime_error(conflict_message(tid, conflicts)),
      tid_(tid),
      conflicts_(std::move(conflicts)) {}

ThreadGroup::ThreadGroup(Process& p, ThreadOptions opts) : p_(p), opts_(opts) {
  if (opts_.shared_base % kPageSize || opts_.shared_size % kPageSize || !opts_.shared_size)
    throw ProcError("shared region must be whole pages");
  if (opts_.stacks == StackLayout::kDisjoint && (!opts_.stack_size || opts_.stack_size % 16))
    throw ProcError("bad stack size");
}

uint32_t ThreadGroup::stack_top(uint32_t tid) const {
  if (opts_.stacks == StackLayout::kOverlapping) return kStackTop;
  uint64_t below = uint64_t(tid) * opts_.stack_size;
  if (below + opts_.stack_size > opts_.shared_size) throw ProcError("no room for thread stack");
  return uint32_t(opts_.shared_base + opts_.shared_size - below);
}

std::vector<uint32_t> ThreadGroup::tids() const {
  std::vector<uint32_t> out;
  for (auto& [tid, t] : threads_) out.push_back(tid);
  return out;
}

Task<void> ThreadGroup::fork(uint32_t tid, std::string_view program, RegisterFile regs,
                             uint64_t limit) {
  if (live(tid)) throw ProcError("thread " + std::to_string(tid) + " already exists");
  Guest& g = p_.guest();
  const ProgramInfo* prog = g.programs().find(std::string(program));
  if (!prog) throw ProcError("unknown program '" + std::string(program) + "'");
  uint32_t top = stack_top(tid);

  uint32_t local = p_.allocate_child();
  uint32_t node = opts_.spread_nodes ? tid % std::max(1u, p_.nodes()) : 0;
  uint32_t child = child_number(node, local);
  threads_[tid] = Thread{local, child};

  if (prog->is_vm()) {
    const AsmProgram& code = *prog->vm;
    if (code.base != kCodeBase || code.code.size() > kRuntimeScratchSize)
      throw ProcError("program '" + prog->name + "' does not fit");
    p_.stage(0, code.code);
    uint32_t len = uint32_t((code.code.size() + kPageSize - 1) & ~uint64_t(kPageSize - 1));
    must(co_await g.put(copy_to(child, kRuntimeScratch, kCodeBase, len)), "thread fork");
  }
  must(co_await g.put(copy_to(child, kSysInfoBase, kSysInfoBase, kPageSize)), "thread fork");
  if (opts_.stacks == StackLayout::kOverlapping)
    must(co_await g.put(copy_to(child, kStackBase, kStackBase, kStackSize)), "thread fork");
  p_.flush();
  uint32_t fs_size = g.load32(kSysInfoBase + sysinfo::kFsSizeOff);
  must(co_await g.put(copy_to(child, kFsBase, kFsBase, fs_size)), "thread fork");
  if (opts_.fs == FsSharing::kExcluded)
    must(co_await g.put(copy_to(child, kFsBase, kFsBaseCopy, fs_size)), "thread fork");

  SysArgs go = copy_to(child, opts_.shared_base, opts_.shared_base, opts_.shared_size);
  go.options |= opt::kSnap | opt::kRegs | opt::kStart;
  go.regs = regs;
  if (!prog->is_vm() || !regs.pc) go.regs.pc = prog->entry_pc();
  go.regs.set(14, top);
  go.limit = limit;
  must(co_await g.put(go), "thread fork");
}

Task<void> ThreadGroup::resume(uint32_t tid, uint64_t limit, const RegisterFile* regs) {
  auto it = threads_.find(tid);
  if (it == threads_.end()) throw ProcError("no thread " + std::to_string(tid));
  Guest& g = p_.guest();
  uint32_t child = it->second.child;
  if (opts_.fs == FsSharing::kShared) {
    p_.flush();
    uint32_t fs_size = g.load32(kSysInfoBase + sysinfo::kFsSizeOff);
    must(co_await g.put(copy_to(child, kFsBase, kFsBase, fs_size)), "thread resume");
  }
  SysArgs go = copy_to(child, opts_.shared_base, opts_.shared_base, opts_.shared_size);
  go.options |= opt::kSnap | opt::kStart;
  go.limit = limit;
  if (regs) {
    go.options |= opt::kRegs;
    go.regs = *regs;
  }
  must(co_await g.put(go), "thread resume");
}

Task<std::vector<MergeConflict>> ThreadGroup::merge_from(uint32_t child) {
  Guest& g = p_.guest();
  uint32_t fs_size = g.load32(kSysInfoBase + sysinfo::kFsSizeOff);
  SysArgs m;
  m.child = child;
  m.options = opt::kMerge;
  m.src = m.dst = kFsBase;
  m.len = fs_size;
  p_.flush();
  SysResult r = co_await g.get(m);
  must(r, "thread merge");
  try {
    p_.reload();
  } catch (const FsFormatError& e) {
    throw ProcError(std::string("shared file system damaged by concurrent writers: ") +
                    e.what());
  }
  co_return r.conflicts;
}

Task<ThreadStop> ThreadGroup::collect(uint32_t tid) {
  auto it = threads_.find(tid);
  if (it == threads_.end()) throw ProcError("no thread " + std::to_string(tid));
  Guest& g = p_.guest();
  uint32_t child = it->second.child;
  SysArgs a;
  a.child = child;
  a.options = opt::kRegs | opt::kMerge;
  a.src = a.dst = opts_.shared_base;
  a.len = opts_.shared_size;
  SysResult r = co_await g.get(a);
  must(r, "thread join");
  ThreadStop s;
  s.regs = r.regs;
  s.status = r.status;
  s.conflicts = std::move(r.conflicts);
  if (s.status.reason == StopReason::kConflict) {
    SysArgs plain;
    plain.child = child;
    SysResult again = co_await g.get(plain);
    must(again, "thread join");
    s.status = again.status;
  }
  if (opts_.fs == FsSharing::kShared) {
    std::vector<MergeConflict> more = co_await merge_from(child);
    s.conflicts.insert(s.conflicts.end(), more.begin(), more.end());
  }
  co_return s;
}

void ThreadGroup::retire(uint32_t tid) {
  auto it = threads_.find(tid);
  if (it == threads_.end()) return;
  p_.release_child(it->second.local);
  threads_.erase(it);
}

Task<ThreadStop> ThreadGroup::join(uint32_t tid) {
  ThreadStop s = co_await collect(tid);
  if (opts_.fs == FsSharing::kExcluded)
    co_await p_.sync_child(threads_.at(tid).child, false, false);
  retire(tid);
  co_return s;
}

Task<std::vector<ThreadStop>> ThreadGroup::barrier() {
  std::vector<ThreadStop> out;
  std::vector<uint32_t> waiting;
  for (uint32_t tid : tids()) {
    ThreadStop s = co_await collect(tid);
    if (s.status.reason == StopReason::kRet && s.status.code == rt::kBarrier) {
      waiting.push_back(tid);
    } else {
      if (opts_.fs == FsSharing::kExcluded)
        co_await p_.sync_child(threads_.at(tid).child, false, false);
      retire(tid);
    }
    out.push_back(std::move(s));
  }
  for (uint32_t tid : waiting) co_await resume(tid);
  co_return out;
}

Task<std::string> ThreadGroup::read_memory(uint32_t tid, uint32_t addr, uint32_t len) {
  constexpr uint32_t kWindow = kRuntimeScratch + 0x80000;
  constexpr uint32_t kWindowSize = 0x40000;
  auto it = threads_.find(tid);
  if (it == threads_.end()) throw ProcError("no thread " + std::to_string(tid));
  if (!len) co_return std::string();
  uint32_t first = addr & ~(kPageSize - 1);
  uint64_t end = (uint64_t(addr) + len + kPageSize - 1) & ~uint64_t(kPageSize - 1);
  if (end - first > kWindowSize) throw ProcError("read too long");
  Guest& g = p_.guest();
  must(co_await g.get(copy_to(it->second.child, first, kWindow, end - first)), "thread read");
  uint32_t at = kWindow + (addr - first);
  if (!g.mapped(at, len)) throw ProcError("thread memory not mapped");
  co_return g.read_string(at, len);
}

void ThreadGroup::check(uint32_t tid, const ThreadStop& s) {
  if (!s.conflicts.empty()) throw ConflictError(tid, s.conflicts);
}

}  // namespace detspace
