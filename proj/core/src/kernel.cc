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

#include "detspace/kernel.h"

#include <algorithm>
#include <bit>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "detspace/digest.h"
#include "detspace/vm.h"
#include "space.h"

namespace detspace {

const char* to_string(ExecutorKind k) {
  return k == ExecutorKind::kSerial ? "serial" : "parallel";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kExit: return "exit";
    case Termination::kTrap: return "trap";
    case Termination::kDeadlock: return "deadlock";
    case Termination::kError: return "error";
  }
  return "?";
}

const char* to_string(ApiError e) {
  switch (e) {
    case ApiError::kOk: return "ok";
    case ApiError::kBadCall: return "bad_call";
    case ApiError::kBadOption: return "bad_option";
    case ApiError::kBadRange: return "bad_range";
    case ApiError::kBadPerm: return "bad_perm";
    case ApiError::kBadNode: return "bad_node";
    case ApiError::kNoSnapshot: return "no_snapshot";
    case ApiError::kNoChild: return "no_child";
    case ApiError::kNotPermitted: return "not_permitted";
    case ApiError::kBadRegs: return "bad_regs";
    case ApiError::kTooLong: return "too_long";
    case ApiError::kFault: return "fault";
  }
  return "?";
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kNone: return "none";
    case StopReason::kRet: return "ret";
    case StopReason::kTrap: return "trap";
    case StopReason::kInsnLimit: return "insn_limit";
    case StopReason::kConflict: return "conflict";
  }
  return "?";
}

std::string RunResult::status_line() const {
  switch (termination) {
    case Termination::kExit: return "exit " + std::to_string(exit_code);
    case Termination::kTrap: return std::string("trap ") + to_string(trap);
    case Termination::kDeadlock: return "deadlock";
    case Termination::kError: return "error " + error;
  }
  return "?";
}

namespace {

struct Outcome {
  enum Kind { kPreempted, kSyscall, kStop, kFatal } kind = kPreempted;
  SysArgs args;
  ApiError decode_error = ApiError::kOk;  // VM syscall that failed to decode
  StopStatus status;
  std::string error;
};

uint32_t neg(ApiError e) { return uint32_t(0) - uint32_t(e); }

std::string child_key(const Space& parent, uint32_t number, uint32_t incarnation) {
  std::ostringstream os;
  os << parent.key << '/' << std::hex << number << '.' << std::dec << incarnation;
  return os.str();
}

bool quiescent(const Space& s) {
  if (s.state != SpaceState::kStopped) return false;
  for (auto& [n, c] : s.children)
    if (!quiescent(*c)) return false;
  return true;
}

}  // namespace

struct KernelState {
  KernelState(const KernelConfig& c, const ProgramTable& p)
      : cfg(c), programs(p), rng(c.seed) {}

  const KernelConfig& cfg;
  const ProgramTable& programs;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Space*> queue;
  std::mt19937_64 rng;
  uint32_t running = 0;
  bool done = false;
  std::unique_ptr<Space> root;
  RunResult result;
  const InputLog* input = nullptr;
  std::map<uint32_t, size_t> cursor;
  std::vector<Message> retired;
  std::mutex debug_mu;

  bool tracking() const { return cfg.cluster.nodes > 1; }

  std::unique_ptr<Space> make_space(std::string key, Space* parent, uint32_t number,
                                    uint32_t home) {
    auto s = std::make_unique<Space>(std::move(key), parent, number, home, tracking());
    s->kernel = this;
    s->programs = &programs;
    s->debug = cfg.debug_console;
    s->debug_mu = &debug_mu;
    s->mem.set_observer(s->tracker.enabled() ? &s->tracker : nullptr);
    ++result.spaces;
    return s;
  }

  void enqueue(Space& s) {
    s.state = SpaceState::kRunnable;
    queue.push_back(&s);
  }

  Space* pick() {
    size_t i = 0;
    if (cfg.executor == ExecutorKind::kParallel && queue.size() > 1)
      i = std::uniform_int_distribution<size_t>(0, queue.size() - 1)(rng);
    Space* s = queue[i];
    queue.erase(queue.begin() + ptrdiff_t(i));
    return s;
  }

  uint64_t pick_slice() {
    if (cfg.executor == ExecutorKind::kSerial) return cfg.max_slice;
    return std::uniform_int_distribution<uint64_t>(1, std::max<uint32_t>(cfg.max_slice, 1))(rng);
  }

  void finish(Termination t, uint32_t code, TrapKind trap, std::string err = {}) {
    if (done) return;
    done = true;
    result.termination = t;
    result.exit_code = code;
    result.trap = trap;
    result.error = std::move(err);
  }

  void retire(Space& s) {
    for (auto& [n, c] : s.children) retire(*c);
    auto msgs = s.tracker.take_messages();
    retired.insert(retired.end(), msgs.begin(), msgs.end());
  }

  // ---- execution (no lock held) -------------------------------------

  Outcome execute(Space& s, uint64_t slice) {
    if (s.regs.pc >= layout::kHostPcBase) return execute_host(s);
    Outcome o;
    uint64_t want = slice;
    if (s.budget) want = std::min(want, *s.budget);
    if (want == 0) {
      o.kind = Outcome::kStop;
      o.status.reason = StopReason::kInsnLimit;
      return o;
    }
    VmResult r = run_until(s.regs, s.mem, want);
    s.insns += r.steps;
    if (s.budget) *s.budget -= r.steps;
    switch (r.stop) {
      case VmStop::kBudget:
        if (s.budget && *s.budget == 0) {
          o.kind = Outcome::kStop;
          o.status.reason = StopReason::kInsnLimit;
        }
        return o;
      case VmStop::kSyscall:
        o.kind = Outcome::kSyscall;
        decode_vm_syscall(s, o);
        return o;
      case VmStop::kHalt:
        o.kind = Outcome::kStop;
        o.status.reason = StopReason::kRet;
        o.status.code = s.regs.get(2);
        return o;
      case VmStop::kTrap:
        o.kind = Outcome::kStop;
        o.status.reason = StopReason::kTrap;
        o.status.trap = r.trap;
        o.status.fault_addr = r.fault_addr;
        return o;
    }
    return o;
  }

  void decode_vm_syscall(Space& s, Outcome& o) {
    const RegisterFile& r = s.regs;
    SysArgs& a = o.args;
    uint32_t call = r.get(1);
    if (call > uint32_t(Call::kDevRead)) {
      o.decode_error = ApiError::kBadCall;
      return;
    }
    a.call = Call(call);
    a.child = r.get(2);
    a.code = r.get(2);
    a.options = r.get(3);
    a.src = r.get(4);
    a.dst = r.get(5);
    a.len = r.get(6);
    a.perm = r.get(7);
    a.limit = r.get(8);
    if (a.call == Call::kPut && (a.options & opt::kRegs)) {
      uint8_t block[kRegBlockBytes];
      if (!s.mem.guest_read(r.get(9), block)) {
        o.decode_error = ApiError::kBadRegs;
        return;
      }
      auto word = [&](int i) {
        return uint32_t(block[4 * i]) | uint32_t(block[4 * i + 1]) << 8 |
               uint32_t(block[4 * i + 2]) << 16 | uint32_t(block[4 * i + 3]) << 24;
      };
      for (int i = 0; i < kNumRegs; ++i) a.regs.r[i] = word(i);
      a.regs.r[0] = 0;
      a.regs.pc = word(kNumRegs);
    }
  }

  Outcome execute_host(Space& s) {
    Outcome o;
    if (s.budget && *s.budget == 0) {
      o.kind = Outcome::kStop;
      o.status.reason = StopReason::kInsnLimit;
      return o;
    }
    if (!s.host || s.host->pc != s.regs.pc) {
      const ProgramInfo* prog = programs.host_at(s.regs.pc);
      if (!prog) {
        o.kind = Outcome::kStop;
        o.status.reason = StopReason::kTrap;
        o.status.trap = TrapKind::kIllegalInstruction;
        o.status.fault_addr = s.regs.pc;
        return o;
      }
      s.host.reset();
      s.host = std::make_unique<HostContext>(&s);
      s.host->pc = s.regs.pc;
      s.host->task = prog->host(s.host->guest);
      s.host->resume_point = s.host->task.handle();
    }
    HostContext& h = *s.host;
    h.request.reset();
    h.jump.reset();
    h.resume_point.resume();
    if (h.jump) {
      s.regs = *h.jump;
      s.regs.r[0] = 0;
      s.host.reset();
      return o;  // keeps running from the new registers
    }
    auto count_one = [&] {
      ++s.insns;
      if (s.budget) --*s.budget;
    };
    if (h.request) {
      count_one();
      o.kind = Outcome::kSyscall;
      o.args = *h.request;
      return o;
    }
    if (h.task.done()) {
      count_one();
      o.kind = Outcome::kStop;
      if (h.task.error()) {
        try {
          std::rethrow_exception(h.task.error());
        } catch (const GuestFault& f) {
          o.status.reason = StopReason::kTrap;
          o.status.trap = TrapKind::kAccessFault;
          o.status.fault_addr = f.addr();
        } catch (const std::exception& e) {
          o.kind = Outcome::kFatal;
          o.error = std::string("host task failed in ") + s.key + ": " + e.what();
        }
      } else {
        o.status.reason = StopReason::kRet;
        o.status.code = h.task.result();
      }
      s.host.reset();
      return o;
    }
    o.kind = Outcome::kFatal;
    o.error = "host task in " + s.key + " suspended outside a kernel call";
    return o;
  }

  // ---- kernel-side handling (lock held) ------------------------------

  void after(Space& s, Outcome& o) {
    switch (o.kind) {
      case Outcome::kPreempted: enqueue(s); break;
      case Outcome::kFatal: finish(Termination::kError, 0, TrapKind::kNone, o.error); break;
      case Outcome::kStop: stop(s, o.status); break;
      case Outcome::kSyscall:
        ++result.syscalls;
        if (cfg.audit) cfg.audit({s.key, o.args.call, o.args.child, o.args.options});
        if (o.decode_error != ApiError::kOk) {
          SysResult r;
          r.err = o.decode_error;
          complete(s, o.args, r);
        } else {
          s.pending = o.args;
          s.state = SpaceState::kBlocked;
          try_complete(s);
        }
        break;
    }
  }

  // A space stops: by Ret, trap, HALT, finished host task or exhausted
  // budget. The root stopping ends the run.
  void stop(Space& s, const StopStatus& st) {
    if (&s == root.get()) {
      if (st.reason == StopReason::kRet) {
        finish(Termination::kExit, st.code, TrapKind::kNone);
      } else if (st.reason == StopReason::kTrap) {
        finish(Termination::kTrap, 0, st.trap);
      } else {
        finish(Termination::kError, 0, TrapKind::kNone, "root stopped unexpectedly");
      }
      return;
    }
    s.state = SpaceState::kStopped;
    s.status = st;
    s.pending.reset();
    if (s.host) s.host->result = SysResult{};
    s.tracker.migrate(s.tracker.home());
    for (Space* p = s.parent; p; p = p->parent)
      if (p->state == SpaceState::kBlocked && p->pending) try_complete(*p);
  }

  void complete(Space& s, const SysArgs& a, SysResult r) {
    s.pending.reset();
    if (s.regs.pc >= layout::kHostPcBase && s.host) {
      s.host->result = std::move(r);
    } else {
      s.regs.set(1, r.ok() ? 0 : neg(r.err));
      if (r.ok() && a.call == Call::kGet) {
        s.regs.set(2, uint32_t(r.status.reason));
        s.regs.set(3, r.status.code);
        s.regs.set(4, uint32_t(r.status.trap));
        s.regs.set(5, r.status.conflicts);
        s.regs.set(6, r.status.first_conflict);
      }
      if (a.call == Call::kDevRead)
        s.regs.set(2, !r.ok() || r.eof ? 0xffffffffu : r.count);
    }
    enqueue(s);
  }

  ApiError validate(const Space& s, const SysArgs& a) const {
    uint32_t o = a.options;
    if (o & ~opt::kAll) return ApiError::kBadOption;
    if (a.call == Call::kPut && (o & opt::kMerge)) return ApiError::kBadOption;
    if (a.call == Call::kGet && (o & (opt::kSnap | opt::kStart))) return ApiError::kBadOption;
    if (std::popcount(o & (opt::kCopy | opt::kZero | opt::kMerge)) > 1)
      return ApiError::kBadOption;
    if ((o & opt::kTree) && (o & (opt::kCopy | opt::kZero | opt::kMerge | opt::kPerm)))
      return ApiError::kBadOption;
    if (a.child > 0xffff) return ApiError::kBadNode;
    auto range_ok = [](uint64_t addr, uint64_t len) {
      return check_range(addr, len) == RangeError::kOk;
    };
    if ((o & opt::kCopy) && (!range_ok(a.src, a.len) || !range_ok(a.dst, a.len)))
      return ApiError::kBadRange;
    if ((o & opt::kZero) && !range_ok(a.dst, a.len)) return ApiError::kBadRange;
    if ((o & opt::kMerge) && (!range_ok(a.src, a.len) || a.src != a.dst))
      return ApiError::kBadRange;
    if (o & opt::kPerm) {
      if (!range_ok(a.dst, a.len)) return ApiError::kBadRange;
      if (!perm_from_bits(a.perm)) return ApiError::kBadPerm;
    }
    if (o & opt::kTree) {
      if (a.src > 0xffff || a.dst > 0xffff) return ApiError::kBadNode;
    }
    if (!resolve_child(a.child, s.tracker.home(), cfg.cluster.nodes))
      return ApiError::kBadNode;
    return ApiError::kOk;
  }

  std::unique_ptr<Space> clone(const Space& src, Space& parent, uint32_t number) {
    auto ref = resolve_child(number, parent.tracker.home(), cfg.cluster.nodes);
    uint32_t home = ref ? ref->node : parent.tracker.home();
    auto c = make_space(child_key(parent, number, parent.incarnations++), &parent, number,
                        home);
    c->regs = src.regs;
    c->mem = src.mem;
    c->mem.set_observer(c->tracker.enabled() ? &c->tracker : nullptr);
    c->snap = src.snap;
    c->status = src.status;
    c->state = SpaceState::kStopped;
    c->tracker.adopt(c->mem);
    for (auto& [n, g] : src.children) c->children[n] = clone(*g, *c, n);
    return c;
  }

  void replace_child(Space& parent, uint32_t number, std::unique_ptr<Space> fresh) {
    auto it = parent.children.find(number);
    if (it != parent.children.end()) retire(*it->second);
    parent.children[number] = std::move(fresh);
  }

  void try_complete(Space& s) {
    SysArgs& a = *s.pending;
    SysResult r;
    switch (a.call) {
      case Call::kRet:
        if (&s == root.get() || !s.parent) {
          r.err = ApiError::kNotPermitted;
          complete(s, a, r);
        } else {
          if (s.regs.pc < layout::kHostPcBase) s.regs.set(1, 0);
          StopStatus st;
          st.reason = StopReason::kRet;
          st.code = a.code;
          stop(s, st);
        }
        return;
      case Call::kDevRead: dev_read(s, a, r); complete(s, a, r); return;
      case Call::kDevWrite: dev_write(s, a, r); complete(s, a, r); return;
      case Call::kPut:
      case Call::kGet: break;
    }

    r.err = validate(s, a);
    if (!r.ok()) return complete(s, a, r);
    ChildRef ref = *resolve_child(a.child, s.tracker.home(), cfg.cluster.nodes);
    s.tracker.migrate(ref.node);

    Space* c = nullptr;
    if (auto it = s.children.find(a.child); it != s.children.end()) c = it->second.get();
    if (!c) {
      if (a.call == Call::kGet) {
        r.err = ApiError::kNoChild;
        return complete(s, a, r);
      }
      auto fresh = make_space(child_key(s, a.child, s.incarnations++), &s, a.child, ref.node);
      c = fresh.get();
      s.children[a.child] = std::move(fresh);
    }
    if (c->state != SpaceState::kStopped) return;  // rendezvous: wait for the stop

    Space* tree_src = nullptr;
    if (a.options & opt::kTree) {
      Space& from = a.call == Call::kPut ? s : *c;
      Space& to = a.call == Call::kPut ? *c : s;
      auto it = from.children.find(uint32_t(a.src));
      if (it == from.children.end()) {
        r.err = ApiError::kNoChild;
        return complete(s, a, r);
      }
      tree_src = it->second.get();
      if (!quiescent(*tree_src)) return;
      auto dit = to.children.find(uint32_t(a.dst));
      if (dit != to.children.end() && dit->second.get() != c && !quiescent(*dit->second))
        return;
      if (a.call == Call::kGet && uint32_t(a.dst) == a.child) {
        r.err = ApiError::kBadOption;  // would replace the child being read
        return complete(s, a, r);
      }
    }
    if ((a.options & opt::kMerge) && !c->snap) {
      r.err = ApiError::kNoSnapshot;
      return complete(s, a, r);
    }
    bool vm_caller = s.regs.pc < layout::kHostPcBase;
    if (a.call == Call::kGet && (a.options & opt::kRegs) && vm_caller &&
        !writable_block(s, s.regs.get(9))) {
      r.err = ApiError::kBadRegs;
      return complete(s, a, r);
    }

    // Refund whatever the child did not use of its reservation.
    if (c->budget && s.budget) {
      *s.budget += *c->budget;
      c->budget = 0;
    }

    r.status = c->status;
    if (a.call == Call::kPut) {
      if (a.options & opt::kRegs) {
        if (c->host && a.regs.pc != c->regs.pc) c->host.reset();
        c->regs = a.regs;
        c->regs.r[0] = 0;
      }
      if (a.options & opt::kCopy) copy_range(s.mem, a.src, c->mem, a.dst, a.len);
      if (a.options & opt::kZero) c->mem.zero_range(a.dst, a.len);
      if (a.options & opt::kPerm) c->mem.set_perms(a.dst, a.len, *perm_from_bits(a.perm));
      if (a.options & opt::kTree) {
        auto copy = clone(*tree_src, *c, uint32_t(a.dst));
        replace_child(*c, uint32_t(a.dst), std::move(copy));
      }
      if (a.options & opt::kSnap) c->snap = c->mem.snapshot();
      if (a.options & opt::kStart) start(s, *c, a.limit);
    } else {
      if (a.options & opt::kRegs) {
        r.regs = c->regs;
        if (vm_caller) write_block(s, s.regs.get(9), c->regs);
      }
      if (a.options & opt::kCopy) copy_range(c->mem, a.src, s.mem, a.dst, a.len);
      if (a.options & opt::kZero) s.mem.zero_range(a.dst, a.len);
      if (a.options & opt::kMerge) {
        MergeReport rep = merge(s.mem, c->mem, *c->snap, a.src, a.len);
        if (!rep.conflicts.empty()) {
          r.status.reason = StopReason::kConflict;
          r.status.conflicts = uint32_t(rep.conflicts.size());
          r.status.first_conflict = rep.conflicts.front().addr;
          r.conflicts = std::move(rep.conflicts);
        }
      }
      if (a.options & opt::kPerm) s.mem.set_perms(a.dst, a.len, *perm_from_bits(a.perm));
      if (a.options & opt::kTree) {
        auto copy = clone(*tree_src, s, uint32_t(a.dst));
        replace_child(s, uint32_t(a.dst), std::move(copy));
      }
    }
    complete(s, a, std::move(r));
  }

  void start(Space& parent, Space& c, uint64_t limit) {
    if (parent.budget) {
      uint64_t grant = limit ? std::min(limit, *parent.budget) : *parent.budget;
      *parent.budget -= grant;
      c.budget = grant;
    } else {
      c.budget = limit ? std::optional<uint64_t>(limit) : std::nullopt;
    }
    c.status = StopStatus{};
    if (c.budget && *c.budget == 0) {
      c.status.reason = StopReason::kInsnLimit;
      return;
    }
    enqueue(c);
  }

  bool writable_block(const Space& s, uint32_t addr) const {
    for (uint32_t off = 0; off < kRegBlockBytes; off += 4) {
      uint32_t a = addr + off;
      if (a < addr) return false;
      auto p = s.mem.perm_of(a >> kPageShift);
      if (!p || *p != Perm::kReadWrite) return false;
    }
    return true;
  }

  void write_block(Space& s, uint32_t addr, const RegisterFile& regs) {
    uint8_t block[kRegBlockBytes];
    for (int i = 0; i <= kNumRegs; ++i) {
      uint32_t v = i == kNumRegs ? regs.pc : regs.get(unsigned(i));
      for (int b = 0; b < 4; ++b) block[4 * i + b] = uint8_t(v >> (8 * b));
    }
    s.mem.guest_write(addr, block);
  }

  void dev_read(Space& s, const SysArgs& a, SysResult& r) {
    if (!s.privileged) {
      r.err = ApiError::kNotPermitted;
      return;
    }
    const auto& recs = input->records();
    size_t& at = cursor[a.code];
    while (at < recs.size() && recs[at].device != a.code) ++at;
    if (at >= recs.size()) {
      r.eof = true;
      return;
    }
    const Record& rec = recs[at];
    if (rec.bytes.size() > a.len || a.dst > 0xffffffffu) {
      r.err = ApiError::kTooLong;
      return;
    }
    std::span<const uint8_t> bytes(reinterpret_cast<const uint8_t*>(rec.bytes.data()),
                                   rec.bytes.size());
    if (!s.mem.guest_write(uint32_t(a.dst), bytes)) {
      r.err = ApiError::kFault;
      return;
    }
    r.count = uint32_t(rec.bytes.size());
    ++at;
  }

  void dev_write(Space& s, const SysArgs& a, SysResult& r) {
    if (!s.privileged) {
      r.err = ApiError::kNotPermitted;
      return;
    }
    if (a.src > 0xffffffffu || a.len > 0xffffffffu) {
      r.err = ApiError::kFault;
      return;
    }
    std::string bytes(size_t(a.len), '\0');
    if (!s.mem.guest_read(uint32_t(a.src),
                          std::span<uint8_t>(reinterpret_cast<uint8_t*>(bytes.data()),
                                             bytes.size()))) {
      r.err = ApiError::kFault;
      return;
    }
    result.output.add(a.code, bytes);
  }

  // ---- worker loop ---------------------------------------------------

  void worker() {
    std::unique_lock lk(mu);
    for (;;) {
      while (!done && queue.empty() && running > 0) cv.wait(lk);
      if (done) break;
      if (queue.empty()) {
        finish(Termination::kDeadlock, 0, TrapKind::kNone);
        break;
      }
      Space* s = pick();
      s->state = SpaceState::kRunning;
      ++running;
      uint64_t slice = pick_slice();
      lk.unlock();
      Outcome o;
      try {
        o = execute(*s, slice);
      } catch (const std::exception& e) {
        o.kind = Outcome::kFatal;
        o.error = e.what();
      }
      lk.lock();
      --running;
      if (!done) {
        try {
          after(*s, o);
        } catch (const std::exception& e) {
          finish(Termination::kError, 0, TrapKind::kNone, e.what());
        }
      }
      cv.notify_all();
    }
    cv.notify_all();
  }

  void load_root(const ProgramInfo& prog) {
    root = make_space("r", nullptr, 0, 0);
    Space& s = *root;
    s.privileged = true;
    MemoryImage& m = s.mem;
    if (prog.is_vm()) {
      const AsmProgram& code = *prog.vm;
      uint64_t size = (code.code.size() + kPageSize - 1) & ~uint64_t(kPageSize - 1);
      if (code.base % kPageSize || size > layout::kCodeSize)
        throw std::invalid_argument("program '" + prog.name + "' does not fit the code region");
      m.zero_range(layout::kCodeBase, layout::kCodeSize);
      m.write(code.base, code.code);
    }
    m.zero_range(layout::kSysInfoBase, kPageSize);
    auto put32 = [&](uint32_t off, uint32_t v) {
      uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
      m.write(layout::kSysInfoBase + off, b);
    };
    put32(sysinfo::kMagicOff, sysinfo::kMagic);
    put32(sysinfo::kNodesOff, cfg.cluster.nodes);
    put32(sysinfo::kFsSizeOff, cfg.fs_size);
    put32(sysinfo::kQuantumOff, uint32_t(std::min<uint64_t>(cfg.quantum, 0xffffffffu)));
    m.set_perms(layout::kSysInfoBase, kPageSize, Perm::kRead);
    m.zero_range(layout::kHeapBase, layout::kHeapSize);
    m.zero_range(layout::kSharedBase, layout::kSharedSize);
    m.zero_range(layout::kStackBase, layout::kStackSize);
    m.zero_range(layout::kProcBase, layout::kProcSize);
    m.zero_range(layout::kArgsBase, layout::kArgsSize);
    m.zero_range(layout::kSpawnArgsBase, layout::kSpawnArgsSize);
    m.zero_range(layout::kFsBase, cfg.fs_size);
    m.zero_range(layout::kFsBaseCopy, cfg.fs_size);
    s.regs.pc = prog.entry_pc();
    s.regs.set(14, layout::kStackTop);
  }

  void hash_space(Sha256& h, const Space& s) {
    h.update(s.key).update_u32(0);
    for (uint32_t v : s.regs.r) h.update_u32(v);
    h.update_u32(s.regs.pc);
    h.update_u32(uint32_t(s.state)).update_u32(uint32_t(s.status.reason));
    h.update_u32(s.status.code).update_u32(uint32_t(s.status.trap));
    auto table = [&](const PageTable& t) {
      h.update_u32(uint32_t(t.size()));
      for (auto& [page, e] : t) {
        h.update_u32(page).update_u32(uint32_t(e.perm));
        h.update(e.data->data(), kPageSize);
      }
    };
    table(s.mem.pages());
    h.update_u32(s.snap ? 1 : 0);
    if (s.snap) table(s.snap->table());
  }

  void collect_messages(Space& s) {
    auto msgs = s.tracker.take_messages();
    retired.insert(retired.end(), msgs.begin(), msgs.end());
    for (auto& [n, c] : s.children) collect_messages(*c);
  }

  void stop_all_hosts(Space& s) {
    s.host.reset();
    for (auto& [n, c] : s.children) stop_all_hosts(*c);
  }
};

Kernel::Kernel(KernelConfig cfg, const ProgramTable& programs)
    : cfg_(std::move(cfg)), programs_(programs) {
  if (cfg_.cluster.nodes < 1 || cfg_.cluster.nodes > kMaxNodes)
    throw std::invalid_argument("cluster size must be in 1..32");
  if (cfg_.fs_size % kPageSize || cfg_.fs_size == 0 || cfg_.fs_size > layout::kFsMaxSize)
    throw std::invalid_argument("fs size must be a page multiple up to 256 MiB");
  if (cfg_.workers == 0) cfg_.workers = 1;
}

Kernel::~Kernel() = default;

RunResult Kernel::run(const std::string& root, const InputLog& input) {
  const ProgramInfo* p = programs_.find(root);
  if (!p) throw std::invalid_argument("unknown program '" + root + "'");
  return run(*p, input);
}

RunResult Kernel::run(const ProgramInfo& root, const InputLog& input) {
  KernelState k(cfg_, programs_);
  k.input = &input;
  k.load_root(root);
  k.enqueue(*k.root);
  if (cfg_.executor == ExecutorKind::kSerial || cfg_.workers == 1) {
    k.worker();
  } else {
    std::vector<std::thread> pool;
    for (uint32_t i = 0; i < cfg_.workers; ++i) pool.emplace_back([&k] { k.worker(); });
    for (auto& t : pool) t.join();
  }
  // Coroutine frames reference their spaces; drop them before the spaces.
  k.stop_all_hosts(*k.root);
  RunResult res = std::move(k.result);
  Sha256 h;
  k.hash_space(h, *k.root);
  res.state_hash = h.hex();
  k.collect_messages(*k.root);
  std::sort(k.retired.begin(), k.retired.end(), [](const Message& a, const Message& b) {
    return std::tie(a.space, a.seq) < std::tie(b.space, b.seq);
  });
  res.messages = std::move(k.retired);
  res.message_counts = count(res.messages);
  std::function<uint64_t(const Space&)> sum = [&](const Space& s) {
    uint64_t t = s.insns;
    for (auto& [n, c] : s.children) t += sum(*c);
    return t;
  };
  res.instructions = sum(*k.root);
  return res;
}

}  // namespace detspace
