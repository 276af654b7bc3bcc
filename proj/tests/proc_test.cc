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

#include <gtest/gtest.h>

#include "detspace/io_log.h"
#include "detspace/kernel.h"
#include "detspace/layout.h"

namespace detspace {
namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

ProgramTable make_table() {
  ProgramTable t;
  add_runtime_programs(t);
  add_process(t, "hello", [](Process& p) -> Task<uint32_t> {
    p.print("hello\n");
    co_return 0;
  });
  add_process(t, "echo", [](Process& p) -> Task<uint32_t> {
    std::vector<std::string> rest(p.args().begin() + 1, p.args().end());
    p.print(join(rest) + "\n");
    co_return uint32_t(rest.size());
  });
  add_process(t, "child", [](Process& p) -> Task<uint32_t> {
    p.print("c" + p.args().at(1) + "\n");
    co_return uint32_t(std::stoul(p.args().at(1)));
  });
  add_process(t, "forker", [](Process& p) -> Task<uint32_t> {
    p.print("start\n");
    std::vector<uint32_t> pids;
    for (int i = 0; i < 3; ++i) {
      std::vector<std::string> args = {std::to_string(i)};
      uint32_t pid = co_await p.fork("child", args);
      pids.push_back(pid);
    }
    p.print("forked " + std::to_string(pids[0]) + std::to_string(pids[1]) +
            std::to_string(pids[2]) + "\n");
    for (;;) {
      std::optional<WaitStatus> st = co_await p.wait();
      if (!st) break;
      p.print("reaped " + std::to_string(st->pid) + " " + st->to_string() + "\n");
    }
    co_return 0;
  });
  add_process(t, "reverse", [](Process& p) -> Task<uint32_t> {
    std::vector<uint32_t> pids;
    for (int i = 0; i < 3; ++i) {
      std::vector<std::string> args = {std::to_string(i)};
      uint32_t pid = co_await p.fork("child", args);
      pids.push_back(pid);
    }
    for (int i = 2; i >= 0; --i) co_await p.waitpid(pids[i]);
    co_return 0;
  });
  add_process(t, "nested", [](Process& p) -> Task<uint32_t> {
    // Every process numbers its own children from 1.
    uint32_t pid = co_await p.fork("forker", std::vector<std::string>());
    WaitStatus st = co_await p.waitpid(pid);
    p.print("nested pid " + std::to_string(pid) + " " + st.to_string() + "\n");
    co_return 0;
  });
  add_process(t, "execer", [](Process& p) -> Task<uint32_t> {
    p.print("before\n");
    std::vector<std::string> args = {"replaced", "image"};
    co_await p.exec("echo", args);
    co_return 99;
  });
  add_process(t, "badexec", [](Process& p) -> Task<uint32_t> {
    bool ok = co_await p.exec("no-such-program", std::vector<std::string>());
    p.print(ok ? "?\n" : "exec failed\n");
    co_return 5;
  });
  add_process(t, "cat", [](Process& p) -> Task<uint32_t> {
    for (;;) {
      std::optional<std::string> chunk = co_await p.read_console(2);
      if (!chunk) break;
      p.print("[" + *chunk + "]");
    }
    p.print("\n");
    co_return 0;
  });
  add_process(t, "catwrap", [](Process& p) -> Task<uint32_t> {
    uint32_t pid = co_await p.fork("cat", std::vector<std::string>());
    co_await p.waitpid(pid);
    co_return 0;
  });
  add_process(t, "syncer", [](Process& p) -> Task<uint32_t> {
    p.print("one ");
    co_await p.fsync();
    p.print("two");
    co_return 0;
  });
  add_process(t, "upper", [](Process& p) -> Task<uint32_t> {
    std::string in;
    if (p.fs().read("/in.txt", in) != FsError::kOk) co_return 1;
    for (char& c : in) c = char(std::toupper(uint8_t(c)));
    p.fs().write("/out.txt", in, p.id());
    p.fs().remove("/in.txt", p.id());
    co_return 0;
  });
  add_process(t, "scribble", [](Process& p) -> Task<uint32_t> {
    p.fs().write("/shared.txt", p.args().at(1), p.id());
    co_return 0;
  });
  add_process(t, "clash", [](Process& p) -> Task<uint32_t> {
    std::vector<std::string> aa = {"a"}, bb = {"b"};
    uint32_t a = co_await p.fork("scribble", aa);
    uint32_t b = co_await p.fork("scribble", bb);
    co_await p.waitpid(a);
    co_await p.waitpid(b);
    std::string out;
    p.print(std::string(to_string(p.fs().read("/shared.txt", out))) + "\n");
    co_return 0;
  });
  add_process(t, "vmjob", [](Process& p) -> Task<uint32_t> {
    std::vector<std::string> args = {"x"};
    uint32_t pid = co_await p.fork("vmprint", args);
    WaitStatus st = co_await p.waitpid(pid);
    p.print(" " + st.to_string() + "\n");
    co_return 0;
  });
  add_process(t, "lonely", [](Process& p) -> Task<uint32_t> {
    auto st = co_await p.wait();
    p.print(st ? "child?\n" : "none\n");
    co_return 0;
  });
  t.add_vm_source("vmprint",
                  "start: LI r1, 2\nLI r2, 0x10005\nLI r3, msg\nLI r4, 5\nSYS\n"
                  "LI r2, 3\nHALT\nmsg: .ascii \"vm ok\"\n");
  t.add_vm_source("vmtrap", "LI r1, 0\nDIVU r1, r1, r1\n");
  return t;
}

const ProgramTable& table() {
  static const ProgramTable t = make_table();
  return t;
}

RunResult run_jobs(const std::vector<std::vector<std::string>>& jobs,
                   std::vector<Record> extra = {}, KernelConfig cfg = {}) {
  InputLog log;
  for (auto& r : extra) log.add(r.device, r.bytes);
  for (auto& j : jobs) log.add(dev::kArgs, args_record(j));
  Kernel k(cfg, table());
  return k.run("init", log);
}

std::vector<std::string> statuses(const RunResult& r) {
  std::vector<std::string> out;
  for (auto& rec : r.output.records())
    if (rec.device == dev::kStatus) out.push_back(rec.bytes);
  return out;
}

FsImage final_fs(const RunResult& r) {
  return FsImage::parse(r.output.collect(dev::kFsDump), layout::kFsDefaultSize);
}

TEST(Args, RecordRoundTrip) {
  std::vector<std::string> argv = {"prog", "a b", "", "c"};
  EXPECT_EQ(split_args(args_record(argv)), argv);
  EXPECT_TRUE(split_args("").empty());
}

TEST(Proc, HelloThroughInit) {
  RunResult r = run_jobs({{"hello"}});
  ASSERT_EQ(r.termination, Termination::kExit) << r.error;
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "hello\n");
  EXPECT_EQ(statuses(r), std::vector<std::string>{"hello: exit 0"});
  EXPECT_EQ(r.exit_code, 0u);
}

TEST(Proc, JobsRunInOrderWithArguments) {
  RunResult r = run_jobs({{"echo", "a", "b"}, {"hello"}, {"echo"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "a b\nhello\n\n");
  EXPECT_EQ(statuses(r),
            (std::vector<std::string>{"echo: exit 2", "hello: exit 0", "echo: exit 0"}));
}

TEST(Proc, ForkAndWaitInForkOrder) {
  RunResult r = run_jobs({{"forker"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut),
            "start\nforked 123\nc0\nreaped 1 exit 0\nc1\nreaped 2 exit 1\nc2\nreaped 3 exit 2\n");
}

TEST(Proc, WaitpidOrderDecidesOutputOrder) {
  RunResult r = run_jobs({{"reverse"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "c2\nc1\nc0\n");
}

TEST(Proc, PidsAreLocalToTheParent) {
  RunResult r = run_jobs({{"nested"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut),
            "start\nforked 123\nc0\nreaped 1 exit 0\nc1\nreaped 2 exit 1\nc2\nreaped 3 exit 2\n"
            "nested pid 1 exit 0\n");
}

TEST(Proc, WaitWithoutChildren) {
  RunResult r = run_jobs({{"lonely"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "none\n");
}

TEST(Proc, ExecReplacesTheProgram) {
  RunResult r = run_jobs({{"execer"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "before\nreplaced image\n");
  EXPECT_EQ(statuses(r), std::vector<std::string>{"execer: exit 2"});
}

TEST(Proc, ExecOfUnknownProgramFails) {
  RunResult r = run_jobs({{"badexec"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "exec failed\n");
  EXPECT_EQ(r.exit_code, 5u);
}

TEST(Proc, UnknownJobIsReported) {
  RunResult r = run_jobs({{"missing"}, {"hello"}});
  auto st = statuses(r);
  ASSERT_EQ(st.size(), 2u);
  EXPECT_TRUE(st[0].starts_with("missing: error")) << st[0];
  EXPECT_EQ(st[1], "hello: exit 0");
}

TEST(Proc, ConsoleInputIsForwardedOnDemand) {
  std::vector<Record> in = {{dev::kConsole, "abc"}, {dev::kConsole, "de"}};
  RunResult direct = run_jobs({{"cat"}}, in);
  EXPECT_EQ(direct.output.collect(dev::kConsoleOut), "[ab][c][de]\n");
  RunResult nested = run_jobs({{"catwrap"}}, in);
  EXPECT_EQ(nested.output.collect(dev::kConsoleOut), "[ab][c][de]\n");
}

TEST(Proc, FsyncEmitsEarly) {
  RunResult r = run_jobs({{"syncer"}});
  std::vector<std::string> chunks;
  for (auto& rec : r.output.records())
    if (rec.device == dev::kConsoleOut) chunks.push_back(rec.bytes);
  EXPECT_EQ(chunks, (std::vector<std::string>{"one ", "two"}));
}

TEST(Proc, FilesFlowThroughTheDump) {
  RunResult r = run_jobs({{"upper"}}, {{dev::kFile, file_record("/in.txt", "abc")}});
  EXPECT_EQ(r.exit_code, 0u);
  FsImage fs = final_fs(r);
  std::string out;
  EXPECT_EQ(fs.read("/out.txt", out), FsError::kOk);
  EXPECT_EQ(out, "ABC");
  EXPECT_FALSE(fs.exists("/in.txt"));
  EXPECT_TRUE(fs.exists(fspath::kConsoleOut));
}

TEST(Proc, ClockRecordBecomesAFile) {
  RunResult r = run_jobs({{"hello"}}, {{dev::kClock, "12345"}});
  std::string out;
  EXPECT_EQ(final_fs(r).read("/etc/clock", out), FsError::kOk);
  EXPECT_EQ(out, "12345");
}

TEST(Proc, SiblingWritesConflict) {
  RunResult r = run_jobs({{"clash"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "conflict\n");
}

TEST(Proc, VmProgramsRunUnderVmhost) {
  RunResult r = run_jobs({{"vmjob"}, {"vmprint"}, {"vmtrap"}});
  EXPECT_EQ(r.output.collect(dev::kConsoleOut), "vm ok exit 3\nvm ok");
  auto st = statuses(r);
  ASSERT_EQ(st.size(), 3u);
  EXPECT_EQ(st[1], "vmprint: exit 3");
  EXPECT_EQ(st[2], "vmtrap: exit " + std::to_string(128 + uint32_t(TrapKind::kDivideByZero)));
}

TEST(Proc, ParallelExecutorAgrees) {
  std::vector<Record> in = {{dev::kConsole, "xy"}, {dev::kFile, file_record("/in.txt", "q")}};
  std::vector<std::vector<std::string>> jobs = {{"nested"}, {"catwrap"}, {"upper"}, {"clash"}};
  RunResult serial = run_jobs(jobs, in);
  for (uint64_t seed = 1; seed <= 4; ++seed) {
    KernelConfig cfg;
    cfg.executor = ExecutorKind::kParallel;
    cfg.workers = 3;
    cfg.seed = seed;
    cfg.max_slice = 13;
    RunResult par = run_jobs(jobs, in, cfg);
    EXPECT_EQ(par.output, serial.output) << "seed " << seed;
    EXPECT_EQ(par.state_hash, serial.state_hash);
  }
}

}  // namespace
}  // namespace detspace
