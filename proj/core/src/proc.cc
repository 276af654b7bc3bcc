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

#include "detspace/proc.h"

#include <algorithm>

#include "detspace/io_log.h"
#include "detspace/kernel.h"
#include "detspace/layout.h"

namespace detspace {

namespace {

using namespace layout;

// Process table at kProcBase.
constexpr uint32_t kProcMagic = 0x31435250;  // "PRC1"
constexpr uint32_t kMagicOff = 0;
constexpr uint32_t kIdOff = 4;
constexpr uint32_t kNextPidOff = 8;
constexpr uint32_t kSeqOff = 12;
constexpr uint32_t kCursorOff = 16;   // console input consumed
constexpr uint32_t kEmittedOff = 20;  // root: console output already written
constexpr uint32_t kEntriesOff = 64;
constexpr uint32_t kEntrySize = 16;
constexpr uint32_t kNumEntries = 256;

enum EntryState : uint32_t { kFree = 0, kLive = 1, kReserved = 2, kCollected = 3 };

// Spawn header at kSpawnArgsBase, written by the parent before the copy.
constexpr uint32_t kSpawnMagic = 0x4E575053;  // "SPWN"
constexpr uint32_t kSpawnFork = 1;
constexpr uint32_t kSpawnExec = 2;

constexpr uint32_t kDevChunk = 0x80000;
constexpr uint32_t kPrintWindow = kRuntimeScratch + 0x80000;
constexpr uint32_t kPrintWindowSize = 0x40000;

constexpr uint64_t kWholeSpace = uint64_t(1) << 32;

uint32_t entry_off(uint32_t i, uint32_t field) { return kEntriesOff + i * kEntrySize + field; }

uint32_t page_round(uint64_t n) {
  return uint32_t((n + kPageSize - 1) & ~uint64_t(kPageSize - 1));
}

uint32_t child_id(uint32_t parent, uint32_t seq) {
  uint32_t h = parent * 0x01000193u ^ (seq + 0x9E3779B9u);
  h ^= h >> 15;
  h *= 0x2C1B3C6Du;
  h ^= h >> 12;
  return h ? h : 1;
}

SysArgs copy_args(uint32_t child, uint64_t src, uint64_t dst, uint64_t len) {
  SysArgs a;
  a.child = child;
  a.options = opt::kCopy;
  a.src = src;
  a.dst = dst;
  a.len = len;
  return a;
}

void check(const SysResult& r, const char* what) {
  if (!r.ok()) throw ProcError(std::string(what) + ": " + to_string(r.err));
}

}  // namespace

std::string WaitStatus::to_string() const {
  switch (reason) {
    case StopReason::kRet: return "exit " + std::to_string(code);
    case StopReason::kTrap: return std::string("trap ") + detspace::to_string(trap);
    default: return std::string("stopped ") + detspace::to_string(reason);
  }
}

uint32_t Process::load(uint32_t off) const { return g_.load32(kProcBase + off); }
void Process::store(uint32_t off, uint32_t v) { g_.store32(kProcBase + off, v); }

Task<void> Process::start() {
  nodes_ = g_.load32(kSysInfoBase + sysinfo::kNodesOff);
  fs_size_ = g_.load32(kSysInfoBase + sysinfo::kFsSizeOff);
  quantum_ = g_.load32(kSysInfoBase + sysinfo::kQuantumOff);

  uint32_t kind = 0;
  if (g_.load32(kSpawnArgsBase) == kSpawnMagic) {
    kind = g_.load32(kSpawnArgsBase + 4);
    id_ = g_.load32(kSpawnArgsBase + 8);
    uint32_t argc = g_.load32(kSpawnArgsBase + 12);
    uint32_t bytes = g_.load32(kSpawnArgsBase + 16);
    args_ = split_args(g_.read_string(kSpawnArgsBase + 20, bytes));
    args_.resize(argc);
    g_.store32(kSpawnArgsBase, 0);
  }
  if (kind != kSpawnExec || load(kMagicOff) != kProcMagic) {
    uint32_t cursor = kind == kSpawnFork ? load(kCursorOff) : 0;
    std::vector<uint8_t> zero(kEntriesOff + kNumEntries * kEntrySize, 0);
    g_.write(kProcBase, zero);
    store(kMagicOff, kProcMagic);
    store(kNextPidOff, 1);
    store(kCursorOff, cursor);
  }
  store(kIdOff, id_);

  std::string argblock = args_record(args_);
  g_.store32(kArgsBase, uint32_t(args_.size()));
  g_.write_string(kArgsBase + 4, argblock);
  g_.store8(kArgsBase + 4 + uint32_t(argblock.size()), 0);

  reload();
  co_return;
}

void Process::finish() { flush(); }

void Process::flush() {
  std::string s = fs_.serialize();
  if (s == stored_) return;
  if (s.size() > fs_size_) throw ProcError("file system region full");
  g_.write_string(kFsBase, s);
  stored_ = std::move(s);
}

void Process::reload() {
  fs_ = load_fs(g_, kFsBase, fs_size_);
  stored_ = fs_.files().empty() && g_.load32(kFsBase) == 0 ? std::string() : fs_.serialize();
}

void Process::print(std::string_view text) {
  FsError e = fs_.append(fspath::kConsoleOut, text, id_);
  if (e != FsError::kOk) throw ProcError(std::string("console write: ") + to_string(e));
}

Task<void> Process::obtain_input() {
  if (is_root()) {
    SysResult r = co_await g_.dev_read(dev::kConsole, kSharedBase, kSharedSize);
    if (r.eof) {
      if (!fs_.find(fspath::kConsoleIn)) fs_.append(fspath::kConsoleIn, "", id_);
      fs_.seal(fspath::kConsoleIn, id_);
    } else {
      check(r, "console input");
      FsError e = fs_.append(fspath::kConsoleIn, g_.read_string(kSharedBase, r.count), id_);
      if (e != FsError::kOk) throw ProcError(std::string("console input: ") + to_string(e));
    }
    co_return;
  }
  flush();
  co_await g_.ret(rt::kIoRequest);
  reload();
}

Task<std::optional<std::string>> Process::read_console(size_t max) {
  for (;;) {
    uint32_t pos = load(kCursorOff);
    const FileNode* in = fs_.find(fspath::kConsoleIn);
    if (in && in->content.size() > pos) {
      size_t n = std::min(max, in->content.size() - pos);
      store(kCursorOff, pos + uint32_t(n));
      co_return in->content.substr(pos, n);
    }
    if (in && in->sealed) co_return std::nullopt;
    co_await obtain_input();
  }
}

Task<void> Process::fsync() {
  if (is_root()) {
    co_await emit_console();
    co_return;
  }
  flush();
  co_await g_.ret(rt::kFsync);
  reload();
}

Task<void> Process::emit_console() {
  const FileNode* out = fs_.find(fspath::kConsoleOut);
  if (!out) co_return;
  uint32_t done = load(kEmittedOff);
  std::string pending = out->content.substr(std::min<size_t>(done, out->content.size()));
  for (size_t at = 0; at < pending.size(); at += kDevChunk) {
    std::string_view chunk = std::string_view(pending).substr(at, kDevChunk);
    g_.write_string(kRuntimeScratch, chunk);
    check(co_await g_.dev_write(dev::kConsoleOut, kRuntimeScratch, uint32_t(chunk.size())),
          "console output");
  }
  store(kEmittedOff, uint32_t(out->content.size()));
}

uint32_t Process::allocate_child() {
  for (uint32_t i = 0; i < rt::kForkChildren; ++i) {
    uint32_t st = load(entry_off(i, 0));
    if (st == kFree || st == kCollected) {
      store(entry_off(i, 0), kReserved);
      return i;
    }
  }
  throw ProcError("no free child numbers");
}

void Process::release_child(uint32_t local) { store(entry_off(local, 0), kFree); }

void Process::stage(uint32_t at, std::span<const uint8_t> bytes) {
  g_.write(kRuntimeScratch + at, bytes);
}

Task<void> Process::map_zero(uint32_t addr, uint32_t len) {
  SysArgs make;
  make.child = rt::kHelperChild;
  check(co_await g_.put(make), "map");
  SysArgs z;
  z.child = rt::kHelperChild;
  z.options = opt::kZero;
  z.dst = addr;
  z.len = len;
  check(co_await g_.get(z), "map");
}

void Process::write_spawn(uint32_t kind, uint32_t id, const std::vector<std::string>& argv) {
  std::string block = args_record(argv);
  if (block.size() + 20 > kSpawnArgsSize) throw ProcError("argument list too long");
  g_.store32(kSpawnArgsBase, kSpawnMagic);
  g_.store32(kSpawnArgsBase + 4, kind);
  g_.store32(kSpawnArgsBase + 8, id);
  g_.store32(kSpawnArgsBase + 12, uint32_t(argv.size()));
  g_.store32(kSpawnArgsBase + 16, uint32_t(block.size()));
  g_.write_string(kSpawnArgsBase + 20, block);
}

const ProgramInfo& Process::resolve(std::string_view program,
                                    std::vector<std::string>& argv) const {
  const ProgramInfo* p = g_.programs().find(std::string(program));
  if (!p) throw ProcError("unknown program '" + std::string(program) + "'");
  argv.insert(argv.begin(), std::string(program));
  if (p->is_vm()) {
    p = g_.programs().find("vmhost");
    if (!p) throw ProcError("vmhost is not registered");
  }
  return *p;
}

Task<uint32_t> Process::fork(std::string_view program, std::vector<std::string> args,
                             uint32_t node_field) {
  const ProgramInfo& prog = resolve(program, args);
  uint32_t local = allocate_child();
  uint32_t pid = load(kNextPidOff);
  uint32_t seq = load(kSeqOff);
  store(kNextPidOff, pid + 1);
  store(kSeqOff, seq + 1);

  write_spawn(kSpawnFork, child_id(id_, seq), args);
  flush();
  uint32_t child = child_number(node_field, local);
  SysResult r = co_await g_.put(copy_args(child, 0, 0, kWholeSpace));
  if (!r.ok()) {
    release_child(local);
    throw ProcError(std::string("fork: ") + to_string(r.err));
  }
  // The child starts a fresh program: it inherits the runtime regions only.
  for (auto [base, size] : {std::pair{kHeapBase, kHeapSize}, std::pair{kStackBase, kStackSize},
                            std::pair{kSharedBase, kSharedSize}}) {
    SysArgs z;
    z.child = child;
    z.options = opt::kZero;
    z.dst = base;
    z.len = size;
    check(co_await g_.put(z), "fork");
  }
  SysArgs go = copy_args(child, kFsBase, kFsBaseCopy, fs_size_);
  go.options |= opt::kRegs | opt::kStart;
  go.regs.pc = prog.entry_pc();
  go.regs.set(14, kStackTop);
  check(co_await g_.put(go), "fork");

  store(entry_off(local, 0), kLive);
  store(entry_off(local, 4), pid);
  store(entry_off(local, 8), child);
  store(entry_off(local, 12), seq);
  co_return pid;
}

Task<void> Process::sync_child(uint32_t child, bool needs_input, bool resume) {
  check(co_await g_.get(copy_args(child, kFsBase, kScratchFs, fs_size_)), "sync");
  check(co_await g_.get(copy_args(child, kFsBaseCopy, kScratchBase, fs_size_)), "sync");
  FsImage theirs = load_fs(g_, kScratchFs, fs_size_);
  FsImage base = load_fs(g_, kScratchBase, fs_size_);
  if (needs_input) {
    for (;;) {
      const FileNode* mine = fs_.find(fspath::kConsoleIn);
      const FileNode* seen = theirs.find(fspath::kConsoleIn);
      size_t have = mine ? mine->content.size() : 0;
      size_t had = seen ? seen->content.size() : 0;
      if (have > had || (mine && mine->sealed)) break;
      co_await obtain_input();
    }
  }
  FsImage next = reconcile(fs_, theirs, base);
  if (is_root()) co_await emit_console();
  if (!resume) co_return;
  store_fs(g_, kScratchFs, next);
  check(co_await g_.put(copy_args(child, kScratchFs, kFsBase, fs_size_)), "sync");
  SysArgs go = copy_args(child, kScratchFs, kFsBaseCopy, fs_size_);
  go.options |= opt::kStart;
  check(co_await g_.put(go), "sync");
}

Task<WaitStatus> Process::waitpid(uint32_t pid) {
  uint32_t local = kNumEntries;
  for (uint32_t i = 0; i < rt::kForkChildren; ++i)
    if (load(entry_off(i, 0)) == kLive && load(entry_off(i, 4)) == pid) local = i;
  if (local == kNumEntries) throw ProcError("waitpid: no child " + std::to_string(pid));
  uint32_t child = load(entry_off(local, 8));
  for (;;) {
    SysArgs a;
    a.child = child;
    SysResult r = co_await g_.get(a);
    check(r, "waitpid");
    const StopStatus& st = r.status;
    if (st.reason == StopReason::kRet &&
        (st.code == rt::kIoRequest || st.code == rt::kFsync)) {
      co_await sync_child(child, st.code == rt::kIoRequest, true);
      continue;
    }
    // Requests nobody serves here end the child like an exit.
    co_await sync_child(child, false, false);
    store(entry_off(local, 0), kCollected);
    WaitStatus w;
    w.pid = pid;
    w.reason = st.reason;
    w.code = st.code;
    w.trap = st.trap;
    co_return w;
  }
}

Task<std::optional<WaitStatus>> Process::wait() {
  std::optional<uint32_t> best;
  uint32_t best_seq = 0;
  for (uint32_t i = 0; i < rt::kForkChildren; ++i) {
    if (load(entry_off(i, 0)) != kLive) continue;
    uint32_t seq = load(entry_off(i, 12));
    if (!best || seq < best_seq) {
      best = load(entry_off(i, 4));
      best_seq = seq;
    }
  }
  if (!best) co_return std::nullopt;
  co_return co_await waitpid(*best);
}

Task<bool> Process::exec(std::string_view program, std::vector<std::string> args) {
  const ProgramInfo* prog = nullptr;
  try {
    prog = &resolve(program, args);
  } catch (const ProcError&) {
    co_return false;
  }
  write_spawn(kSpawnExec, id_, args);
  flush();
  const uint32_t c = rt::kExecChild;
  check(co_await g_.put(copy_args(c, 0, 0, kWholeSpace)), "exec");
  for (auto [base, size] : {std::pair{kHeapBase, kHeapSize}, std::pair{kStackBase, kStackSize},
                            std::pair{kSharedBase, kSharedSize}}) {
    SysArgs z;
    z.child = c;
    z.options = opt::kZero;
    z.dst = base;
    z.len = size;
    check(co_await g_.put(z), "exec");
  }
  check(co_await g_.get(copy_args(c, 0, 0, kWholeSpace)), "exec");
  RegisterFile regs;
  regs.pc = prog->entry_pc();
  regs.set(14, kStackTop);
  co_await g_.jump(regs);
  co_return false;
}

const ProgramInfo& add_process(ProgramTable& t, const std::string& name, ProcMain main) {
  return t.add_host(name, [main = std::move(main)](Guest& g) -> Task<uint32_t> {
    Process p(g);
    co_await p.start();
    uint32_t code = co_await main(p);
    p.finish();
    co_return std::min(code, rt::kMaxExit);
  });
}

namespace {

Task<std::optional<std::string>> read_record(Guest& g, uint32_t device) {
  SysResult r = co_await g.dev_read(device, kSharedBase, kSharedSize);
  if (r.eof) co_return std::nullopt;
  check(r, "input log");
  co_return g.read_string(kSharedBase, r.count);
}

Task<void> write_record(Guest& g, uint32_t device, std::string_view bytes) {
  g.write_string(kSharedBase, bytes);
  check(co_await g.dev_write(device, kSharedBase, uint32_t(bytes.size())), "output");
}

Task<uint32_t> init_main(Process& p) {
  Guest& g = p.guest();
  if (!p.is_root()) {
    p.print("init: must run as the root\n");
    co_return 1;
  }
  while (auto rec = co_await read_record(g, dev::kFile)) {
    size_t nul = rec->find('\0');
    if (nul == std::string::npos) throw ProcError("file record without a path");
    FsError e = p.fs().write(rec->substr(0, nul), std::string_view(*rec).substr(nul + 1), p.id());
    if (e != FsError::kOk) throw ProcError(std::string("loading files: ") + to_string(e));
  }
  p.fs().append(fspath::kConsoleIn, "", p.id());
  p.fs().append(fspath::kConsoleOut, "", p.id());

  uint32_t last = 0;
  while (auto rec = co_await read_record(g, dev::kArgs)) {
    if (auto clock = co_await read_record(g, dev::kClock)) p.fs().write("/etc/clock", *clock, p.id());
    std::vector<std::string> argv = split_args(*rec);
    if (argv.empty()) {
      co_await write_record(g, dev::kStatus, "error empty command");
      last = 127;
      continue;
    }
    std::string name = argv.front();
    argv.erase(argv.begin());
    std::optional<uint32_t> pid;
    std::string failure;
    try {
      pid = co_await p.fork(name, argv);
    } catch (const ProcError& e) {
      failure = e.what();
    }
    if (!pid) {
      co_await write_record(g, dev::kStatus, name + ": error " + failure);
      last = 127;
      continue;
    }
    WaitStatus st = co_await p.waitpid(*pid);
    co_await write_record(g, dev::kStatus, name + ": " + st.to_string());
    last = st.exited() ? st.code : 128 + uint32_t(st.trap);
  }
  co_await p.fsync();
  co_await write_record(g, dev::kFsDump, p.fs().serialize());
  co_return last;
}

Task<uint32_t> vmhost_main(Process& p) {
  Guest& g = p.guest();
  const ProgramInfo* prog = p.args().empty() ? nullptr : g.programs().find(p.args()[0]);
  if (!prog || !prog->is_vm()) {
    p.print("vmhost: not a VM program\n");
    co_return 127;
  }
  const AsmProgram& code = *prog->vm;
  if (code.base != kCodeBase || code.code.size() > kPrintWindow - kRuntimeScratch) {
    p.print("vmhost: program does not fit\n");
    co_return 127;
  }
  uint32_t child = p.allocate_child();
  p.stage(0, code.code);
  check(co_await g.put(copy_args(child, 0, 0, kWholeSpace)), "vmhost");
  SysArgs z;
  z.child = child;
  z.options = opt::kZero;
  z.dst = kCodeBase;
  z.len = kCodeSize;
  check(co_await g.put(z), "vmhost");
  SysArgs load = copy_args(child, kRuntimeScratch, kCodeBase, page_round(code.code.size()));
  load.options |= opt::kRegs | opt::kStart;
  load.regs.pc = code.entry;
  load.regs.set(2, uint32_t(p.args().size()));
  load.regs.set(14, kStackTop);
  check(co_await g.put(load), "vmhost");

  for (;;) {
    SysArgs a;
    a.child = child;
    a.options = opt::kRegs;
    SysResult r = co_await g.get(a);
    check(r, "vmhost");
    const StopStatus& st = r.status;
    if (st.reason == StopReason::kRet && st.code == rt::kPrint) {
      uint32_t addr = r.regs.get(3), len = r.regs.get(4);
      uint32_t first = addr & ~(kPageSize - 1);
      uint64_t span = page_round(uint64_t(addr) + len) - uint64_t(first);
      if (span > kPrintWindowSize) {
        p.print("vmhost: print too long\n");
        co_return 126;
      }
      if (len) {
        check(co_await g.get(copy_args(child, first, kPrintWindow, span)), "vmhost");
        uint32_t at = kPrintWindow + (addr - first);
        if (!g.mapped(at, len)) {
          p.print("vmhost: print from unmapped memory\n");
          co_return 126;
        }
        p.print(g.read_string(at, len));
      }
      SysArgs go;
      go.child = child;
      go.options = opt::kStart;
      check(co_await g.put(go), "vmhost");
      continue;
    }
    p.release_child(child);
    if (st.reason == StopReason::kRet && st.code < rt::kRequestBase) co_return st.code;
    if (st.reason == StopReason::kTrap) co_return 128 + uint32_t(st.trap);
    p.print("vmhost: unsupported request\n");
    co_return 126;
  }
}

}  // namespace

void add_runtime_programs(ProgramTable& t) {
  add_process(t, "init", init_main);
  add_process(t, "vmhost", vmhost_main);
}

std::string file_record(std::string_view path, std::string_view content) {
  std::string s(path);
  s.push_back('\0');
  s += content;
  return s;
}

std::string args_record(const std::vector<std::string>& argv) {
  std::string s;
  for (size_t i = 0; i < argv.size(); ++i) {
    if (i) s.push_back('\0');
    s += argv[i];
  }
  return s;
}

std::vector<std::string> split_args(std::string_view rec) {
  std::vector<std::string> out;
  if (rec.empty()) return out;
  size_t at = 0;
  for (;;) {
    size_t nul = rec.find('\0', at);
    out.emplace_back(rec.substr(at, nul == std::string_view::npos ? rec.npos : nul - at));
    if (nul == std::string_view::npos) break;
    at = nul + 1;
  }
  return out;
}

}  // namespace detspace
