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

#include <algorithm>
#include <cstdio>

#include "detspace/guest.h"

namespace detspace {

namespace {

constexpr std::string_view kPrelude = R"(
; ---- deterministic scheduler runtime ----
.align 4
mutex_lock:
mutex_lock_fast_begin:
  LD r2, 0(r1)
  BNE r2, r13, mutex_lock_slow
  LD r2, 4(r1)
  BNE r2, r0, mutex_lock_slow
  LI r2, 1
  ST r2, 4(r1)
mutex_lock_fast_end:
  LI r1, 0
  JR r15
mutex_lock_slow:
  MOV r11, r1
  LI r10, 1
  JAL r0, sched_call

mutex_unlock:
mutex_unlock_fast_begin:
  LD r2, 0(r1)
  BNE r2, r13, mutex_unlock_slow
  LD r2, 4(r1)
  BEQ r2, r0, mutex_unlock_slow
  LD r2, 8(r1)
  BNE r2, r0, mutex_unlock_slow
  ST r0, 4(r1)
mutex_unlock_fast_end:
  LI r1, 0
  JR r15
mutex_unlock_slow:
  MOV r11, r1
  LI r10, 2
  JAL r0, sched_call

cond_wait:
  MOV r11, r1
  MOV r12, r2
  LI r10, 3
  JAL r0, sched_call
cond_signal:
  MOV r11, r1
  LI r10, 4
  JAL r0, sched_call
cond_broadcast:
  MOV r11, r1
  LI r10, 5
  JAL r0, sched_call
thread_spawn:
  MOV r11, r1
  MOV r12, r2
  LI r10, 6
  JAL r0, sched_call
join_any:
  LI r10, 7
  JAL r0, sched_call
sched_print:
  MOV r11, r1
  MOV r12, r2
  LI r10, 8
  JAL r0, sched_call
sched_yield:
  LI r10, 9
  JAL r0, sched_call
thread_exit:
  MOV r2, r1
  LI r1, 2
  SYS
sched_call:
  LI r1, 2
  LI r2, 0x10004
  SYS
  JR r15
)";

}  // namespace

std::string_view dsched_prelude() { return kPrelude; }

std::string SchedEvent::line() const {
  char buf[48];
  std::snprintf(buf, sizeof buf, " 0x%x", obj);
  return std::to_string(vt) + " " + std::to_string(tid) + " " + op + buf;
}

std::string SchedResult::trace_text() const {
  std::string s;
  for (const SchedEvent& e : trace) s += e.line() + "\n";
  return s;
}

DetScheduler::DetScheduler(Process& p, SchedOptions opts)
    : p_(p),
      opts_(opts),
      group_(p, ThreadOptions{opts.shared_base, opts.shared_size, StackLayout::kOverlapping,
                              0x4000, FsSharing::kExcluded, opts.spread_nodes}),
      quantum_(opts.quantum ? opts.quantum : p.quantum()) {
  if (!quantum_) quantum_ = 10'000'000;
}

uint32_t DetScheduler::add(std::string_view program, RegisterFile regs) {
  const ProgramInfo* prog = p_.guest().programs().find(std::string(program));
  if (!prog || !prog->is_vm())
    throw ProcError("'" + std::string(program) + "' is not a VM program");
  uint32_t tid = threads_.empty() ? 0 : threads_.rbegin()->first + 1;
  Thread t;
  t.program = prog->name;
  t.regs = regs;
  t.regs.set(13, tid + 1);
  threads_[tid] = std::move(t);
  return tid;
}

const std::vector<std::pair<uint32_t, uint32_t>>& DetScheduler::regions(
    const std::string& program) {
  auto it = regions_.find(program);
  if (it != regions_.end()) return it->second;
  std::vector<std::pair<uint32_t, uint32_t>> out;
  const ProgramInfo* prog = p_.guest().programs().find(program);
  if (prog && prog->is_vm()) {
    for (auto& [name, addr] : prog->vm->symbols) {
      if (!name.ends_with("_begin")) continue;
      auto end = prog->vm->symbols.find(name.substr(0, name.size() - 6) + "_end");
      if (end != prog->vm->symbols.end() && end->second > addr) out.emplace_back(addr, end->second);
    }
  }
  return regions_[program] = std::move(out);
}

void DetScheduler::event(uint32_t tid, std::string op, uint32_t obj) {
  result_.trace.push_back({vt_, tid, std::move(op), obj});
}

void DetScheduler::finish_op(uint32_t tid, uint32_t result) {
  Thread& t = threads_.at(tid);
  t.regs.set(1, result);
  t.regs_dirty = true;
  t.state = State::kRunnable;
}

bool DetScheduler::valid_mutex(uint32_t m) const {
  return m % 4 == 0 && m >= opts_.shared_base &&
         uint64_t(m) + kMutexBytes <= uint64_t(opts_.shared_base) + opts_.shared_size;
}

void DetScheduler::acquire(uint32_t tid, uint32_t m) {
  Guest& g = p_.guest();
  g.store32(m, tid + 1);
  g.store32(m + 4, 1);
  event(tid, "acquire", m);
}

void DetScheduler::release(uint32_t m) {
  Guest& g = p_.guest();
  g.store32(m + 4, 0);
  auto it = mutex_waiters_.find(m);
  if (it == mutex_waiters_.end() || it->second.empty()) return;
  Waiter w = *it->second.begin();
  it->second.erase(it->second.begin());
  g.store32(m + 8, uint32_t(it->second.size()));
  acquire(w.tid, m);
  finish_op(w.tid, 0);
}

void DetScheduler::enqueue_mutex(uint32_t tid, uint32_t m) {
  auto& q = mutex_waiters_[m];
  q.insert({vt_, tid});
  p_.guest().store32(m + 8, uint32_t(q.size()));
  threads_.at(tid).state = State::kMutex;
}

Task<void> DetScheduler::serve(uint32_t tid) {
  Guest& g = p_.guest();
  Thread& t = threads_.at(tid);
  uint32_t op = t.regs.get(10), obj = t.regs.get(11), arg = t.regs.get(12);
  uint32_t self = tid + 1;
  auto holds = [&](uint32_t m) {
    return valid_mutex(m) && g.load32(m) == self && g.load32(m + 4) != 0;
  };
  switch (op) {
    case sched_op::kLock:
      event(tid, "lock", obj);
      if (!valid_mutex(obj) || holds(obj)) {
        event(tid, "error", obj);
        finish_op(tid, sched_op::kError);
      } else if (g.load32(obj + 4) == 0) {
        acquire(tid, obj);
        finish_op(tid, 0);
      } else {
        enqueue_mutex(tid, obj);
      }
      break;
    case sched_op::kUnlock:
      event(tid, "unlock", obj);
      if (!holds(obj)) {
        event(tid, "error", obj);
        finish_op(tid, sched_op::kError);
      } else {
        release(obj);
        finish_op(tid, 0);
      }
      break;
    case sched_op::kWait:
      event(tid, "wait", obj);
      if (!holds(arg)) {
        event(tid, "error", arg);
        finish_op(tid, sched_op::kError);
      } else {
        release(arg);
        cond_waiters_[obj].insert({vt_, tid});
        cond_mutex_[tid] = arg;
        t.state = State::kCond;
      }
      break;
    case sched_op::kSignal:
    case sched_op::kBroadcast: {
      event(tid, op == sched_op::kSignal ? "signal" : "broadcast", obj);
      auto& q = cond_waiters_[obj];
      size_t n = op == sched_op::kSignal ? std::min<size_t>(1, q.size()) : q.size();
      for (size_t i = 0; i < n; ++i) {
        Waiter w = *q.begin();
        q.erase(q.begin());
        uint32_t m = cond_mutex_.at(w.tid);
        cond_mutex_.erase(w.tid);
        event(w.tid, "wake", obj);
        if (g.load32(m + 4) == 0) {
          acquire(w.tid, m);
          finish_op(w.tid, 0);
        } else {
          enqueue_mutex(w.tid, m);
        }
      }
      finish_op(tid, 0);
      break;
    }
    case sched_op::kSpawn: {
      uint32_t nid = threads_.rbegin()->first + 1;
      Thread nt;
      nt.program = t.program;
      nt.regs.pc = obj;
      nt.regs.set(1, arg);
      nt.regs.set(13, nid + 1);
      threads_[nid] = std::move(nt);
      event(tid, "spawn", nid);
      finish_op(tid, nid);
      break;
    }
    case sched_op::kJoinAny:
      event(tid, "join_any", 0);
      join_waiters_.insert({vt_, tid});
      t.state = State::kJoin;
      wake_joiners();
      break;
    case sched_op::kPrint: {
      event(tid, "print", arg);
      std::string text;
      bool ok = true;
      try {
        text = co_await group_.read_memory(tid, obj, arg);
      } catch (const ProcError&) {
        ok = false;
      }
      if (ok) p_.print(text);
      finish_op(tid, ok ? 0 : sched_op::kError);
      break;
    }
    case sched_op::kYield:
      event(tid, "yield", 0);
      finish_op(tid, 0);
      break;
    default:
      event(tid, "bad_op", op);
      finish_op(tid, sched_op::kError);
  }
}

void DetScheduler::grant_unlocked() {
  Guest& g = p_.guest();
  for (auto& [m, q] : mutex_waiters_) {
    if (q.empty() || g.load32(m + 4) != 0) continue;
    Waiter w = *q.begin();
    q.erase(q.begin());
    g.store32(m + 8, uint32_t(q.size()));
    acquire(w.tid, m);
    finish_op(w.tid, 0);
  }
}

void DetScheduler::wake_joiners() {
  while (!join_waiters_.empty()) {
    Waiter w = *join_waiters_.begin();
    std::optional<uint32_t> pick;
    uint64_t best = 0;
    bool others_alive = false;
    for (auto& [tid, t] : threads_) {
      if (tid == w.tid) continue;
      if (t.state != State::kDone) {
        others_alive = true;
      } else if (!t.joined && (!pick || t.exit_vt < best)) {
        pick = tid;
        best = t.exit_vt;
      }
    }
    if (!pick && others_alive) break;
    join_waiters_.erase(join_waiters_.begin());
    if (pick) {
      threads_.at(*pick).joined = true;
      event(w.tid, "joined", *pick);
      finish_op(w.tid, *pick);
    } else {
      event(w.tid, "error", 0);
      finish_op(w.tid, sched_op::kError);
    }
  }
}

Task<SchedResult> DetScheduler::run() {
  for (;;) {
    std::vector<uint32_t> running;
    for (auto& [tid, t] : threads_) {
      // A region longer than the quantum would restart forever.
      uint64_t q = quantum_;
      for (auto [b, e] : regions(t.program)) q = std::max<uint64_t>(q, (e - b) / 4 + 1);
      if (t.state == State::kNew) {
        co_await group_.fork(tid, t.program, t.regs, q);
      } else if (t.state == State::kRunnable) {
        co_await group_.resume(tid, q, t.regs_dirty ? &t.regs : nullptr);
      } else {
        continue;
      }
      t.regs_dirty = false;
      t.state = State::kRunning;
      running.push_back(tid);
    }
    if (running.empty()) {
      uint32_t blocked = 0;
      for (auto& [tid, t] : threads_) blocked += t.state != State::kDone;
      if (blocked) {
        result_.deadlock = true;
        event(0, "deadlock", blocked);
      }
      break;
    }
    ++result_.rounds;

    std::vector<uint32_t> requests;
    for (uint32_t tid : running) {
      ThreadStop s = co_await group_.collect(tid);
      ThreadGroup::check(tid, s);
      Thread& t = threads_.at(tid);
      t.regs = s.regs;
      const StopStatus& st = s.status;
      if (st.reason == StopReason::kInsnLimit) {
        t.state = State::kRunnable;
        for (auto [b, e] : regions(t.program)) {
          if (t.regs.pc >= b && t.regs.pc < e) {
            t.regs.pc = b;
            t.regs_dirty = true;
          }
        }
      } else if (st.reason == StopReason::kRet && st.code == rt::kSched) {
        requests.push_back(tid);
      } else {
        t.state = State::kDone;
        t.exit_vt = vt_;
        result_.exits[tid] = st;
        if (st.reason == StopReason::kTrap)
          event(tid, "trap", uint32_t(st.trap));
        else
          event(tid, "exit", st.code);
        group_.retire(tid);
      }
    }
    for (uint32_t tid : requests) co_await serve(tid);
    grant_unlocked();
    wake_joiners();
    ++vt_;
  }
  if (!opts_.trace_path.empty()) {
    FsError e = p_.fs().write(opts_.trace_path, result_.trace_text(), p_.id());
    if (e != FsError::kOk) throw ProcError(std::string("writing trace: ") + to_string(e));
  }
  co_return result_;
}

namespace {

Task<uint32_t> dsched_main(Process& p) {
  const auto& argv = p.args();
  if (argv.size() < 2) {
    p.print("usage: dsched PROGRAM [QUANTUM]\n");
    co_return 127;
  }
  SchedOptions opts;
  if (argv.size() > 2) opts.quantum = std::stoull(argv[2]);
  DetScheduler sched(p, opts);
  sched.add(argv[1]);
  SchedResult r;
  std::string failure;
  try {
    r = co_await sched.run();
  } catch (const ConflictError& e) {
    failure = e.what();
  }
  if (!failure.empty()) {
    p.print("dsched: " + failure + "\n");
    co_return 125;
  }
  if (r.deadlock) {
    p.print("dsched: deadlock\n");
    co_return 124;
  }
  const StopStatus& main = r.exits[0];
  co_return main.reason == StopReason::kRet ? main.code : 128 + uint32_t(main.trap);
}

}  // namespace

void add_dsched_runner(ProgramTable& t) { add_process(t, "dsched", dsched_main); }

}  // namespace detspace
