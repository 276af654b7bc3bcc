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

#include "detspace/cluster.h"

#include <gtest/gtest.h>

#include <random>

#include "detspace/guest.h"
#include "detspace/io_log.h"
#include "detspace/kernel.h"
#include "detspace/proc.h"

namespace detspace {
namespace {

using layout::kHeapBase;

TEST(Cluster, ParsesTopology) {
  EXPECT_EQ(ClusterConfig::parse("nodes=4\n").nodes, 4u);
  EXPECT_EQ(ClusterConfig::parse("# comment\n  nodes = 8 \n").nodes, 1u + 7u);
  EXPECT_EQ(ClusterConfig::parse("").nodes, 1u);
  EXPECT_EQ(ClusterConfig::parse(ClusterConfig{32}.to_string()).nodes, 32u);
  EXPECT_THROW(ClusterConfig::parse("nodes=0"), std::invalid_argument);
  EXPECT_THROW(ClusterConfig::parse("nodes=33"), std::invalid_argument);
  EXPECT_THROW(ClusterConfig::parse("nodes=3x"), std::invalid_argument);
  EXPECT_THROW(ClusterConfig::parse("speed=3"), std::invalid_argument);
  EXPECT_THROW(ClusterConfig::parse("nodes"), std::invalid_argument);
}

TEST(Cluster, NodeFieldZeroIsHome) {
  for (uint32_t n = 1; n <= kMaxNodes; ++n)
    for (uint32_t home = 0; home < n; ++home) {
      auto r = resolve_child(17, home, n);
      ASSERT_TRUE(r);
      EXPECT_EQ(r->node, home);
      EXPECT_EQ(r->local, 17u);
    }
}

TEST(Cluster, SplitsNodeAndLocalBits) {
  auto r = resolve_child(child_number(3, 5), 0, 8);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->node, 3u);
  EXPECT_EQ(r->local, 5u);
  EXPECT_FALSE(resolve_child(child_number(3, 5), 0, 3));
  // Relative to the caller's home.
  r = resolve_child(child_number(3, 5), 6, 8);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->node, 1u);
}

TEST(Cluster, ResolveMatchesArithmetic) {
  std::mt19937 rng(7);
  for (int i = 0; i < 2000; ++i) {
    uint32_t n = rng() % kMaxNodes + 1, home = rng() % n, number = rng() & 0xffff;
    uint32_t field = number / 2048, local = number % 2048;
    auto r = resolve_child(number, home, n);
    if (field >= n) {
      EXPECT_FALSE(r);
    } else {
      ASSERT_TRUE(r);
      EXPECT_EQ(r->node, (home + field) % n);
      EXPECT_EQ(r->local, local);
    }
  }
}

TEST(Cluster, TouchAfterMigrateFetchesOnce) {
  SpaceTracker t("s", 0, true);
  t.on_access(4, 1, true);  // written at home
  t.migrate(2);
  t.on_access(4, 1, false);
  t.on_access(4, 1, false);
  MessageCounts c = count(t.messages());
  EXPECT_EQ(c.migrate, 1u);
  EXPECT_EQ(c.page_request, 1u);
  EXPECT_EQ(c.page_reply, 1u);
  EXPECT_EQ(format_trace(t.messages()),
            "s 0 migrate 0 2 0\ns 1 page_request 2 0 4\ns 2 page_reply 0 2 4\n");
}

TEST(Cluster, RevisitUsesCachedCopy) {
  SpaceTracker t("s", 0, true);
  for (uint32_t p = 0; p < 8; ++p) t.on_access(p, 1, true);
  for (int visit = 0; visit < 3; ++visit) {
    t.migrate(1);
    for (uint32_t p = 0; p < 8; ++p) t.on_access(p, 1, false);
    t.migrate(0);
  }
  EXPECT_EQ(count(t.messages()).page_request, 8u);
  EXPECT_EQ(count(t.messages()).migrate, 6u);
}

TEST(Cluster, WriteInvalidatesRemoteCopy) {
  SpaceTracker t("s", 0, true);
  t.on_access(0, 1, true);
  t.migrate(1);
  t.on_access(0, 1, false);
  t.migrate(0);
  t.on_access(0, 2, true);  // home copy is current: no fetch
  EXPECT_EQ(count(t.messages()).page_request, 1u);
  t.migrate(1);
  t.on_access(0, 2, false);  // stale version at node 1
  EXPECT_EQ(count(t.messages()).page_request, 2u);
  EXPECT_EQ(t.messages().back().from, 0u);
}

TEST(Cluster, DisabledTrackerIsSilent) {
  SpaceTracker t("s", 0, false);
  t.migrate(3);
  t.on_access(0, 1, false);
  EXPECT_TRUE(t.messages().empty());
}

constexpr uint32_t kDataPages = 16;

// The root writes data pages, then alternates between a child on node 1
// (copying the data there) and a child at home. `rewrite` changes the data
// before each visit.
ProgramTable circuit_table(int visits, bool rewrite) {
  ProgramTable t;
  const ProgramInfo& leaf = t.add_host("leaf", [](Guest& g) -> Task<uint32_t> {
    for (;;) {
      uint32_t sum = 0;
      for (uint32_t p = 0; p < kDataPages; ++p) sum += g.load32(kHeapBase + p * kPageSize);
      co_await g.ret(sum);
    }
  });
  uint32_t leaf_pc = leaf.entry_pc();
  t.add_host("root", [=](Guest& g) -> Task<uint32_t> {
    uint32_t far = g.load32(layout::kSysInfoBase + sysinfo::kNodesOff) > 1 ? 1 : 0;
    for (uint32_t p = 0; p < kDataPages; ++p) g.store32(kHeapBase + p * kPageSize, p + 1);
    uint32_t total = 0;
    for (int v = 0; v < visits; ++v) {
      if (rewrite)
        for (uint32_t p = 0; p < kDataPages; ++p)
          g.store32(kHeapBase + p * kPageSize, p + 1 + uint32_t(v));
      for (uint32_t side = 0; side < 2; ++side) {
        SysArgs a;
        a.child = child_number(side ? 0 : far, side);
        a.options = opt::kCopy | opt::kRegs | opt::kStart;
        a.src = a.dst = kHeapBase;
        a.len = kDataPages * kPageSize;
        a.regs.pc = leaf_pc;
        if (!(co_await g.put(a)).ok()) co_return 1000;
        SysArgs w;
        w.child = a.child;
        SysResult r = co_await g.get(w);
        total += r.status.code;
      }
    }
    co_return total;
  });
  return t;
}

RunResult run_circuit(int visits, bool rewrite, uint32_t nodes) {
  ProgramTable t = circuit_table(visits, rewrite);
  KernelConfig cfg;
  cfg.cluster.nodes = nodes;
  return Kernel(cfg, t).run("root", {});
}

TEST(Cluster, RevisitIssuesNoRepeatPageRequests) {
  RunResult once = run_circuit(1, false, 2);
  RunResult thrice = run_circuit(3, false, 2);
  ASSERT_EQ(once.termination, Termination::kExit) << once.error;
  EXPECT_EQ(thrice.exit_code, 3 * once.exit_code);
  EXPECT_GE(once.message_counts.page_request, kDataPages);
  EXPECT_EQ(thrice.message_counts.page_request, once.message_counts.page_request);
  EXPECT_GT(thrice.message_counts.migrate, once.message_counts.migrate);
}

TEST(Cluster, ModifiedPagesAreFetchedAgain) {
  RunResult once = run_circuit(1, true, 2);
  RunResult thrice = run_circuit(3, true, 2);
  EXPECT_GE(thrice.message_counts.page_request,
            once.message_counts.page_request + 2 * kDataPages);
}

TEST(Cluster, SingleNodeSendsNothing) {
  RunResult r = run_circuit(2, false, 1);
  EXPECT_TRUE(r.messages.empty());
  EXPECT_EQ(r.exit_code, run_circuit(2, false, 2).exit_code);
}

TEST(Cluster, MessageTraceIsDeterministic) {
  RunResult a = run_circuit(2, true, 4);
  KernelConfig cfg;
  cfg.cluster.nodes = 4;
  cfg.executor = ExecutorKind::kParallel;
  cfg.seed = 11;
  ProgramTable t = circuit_table(2, true);
  RunResult b = Kernel(cfg, t).run("root", {});
  EXPECT_EQ(format_trace(a.messages), format_trace(b.messages));
  EXPECT_EQ(a.message_counts, b.message_counts);
}

TEST(Cluster, BadNodeFieldIsRejected) {
  ProgramTable t;
  t.add_host("root", [](Guest& g) -> Task<uint32_t> {
    SysArgs a;
    a.child = child_number(2, 0);
    SysResult r = co_await g.put(a);
    co_return uint32_t(r.err);
  });
  KernelConfig cfg;
  cfg.cluster.nodes = 2;
  EXPECT_EQ(Kernel(cfg, t).run("root", {}).exit_code, uint32_t(ApiError::kBadNode));
  cfg.cluster.nodes = 3;
  EXPECT_EQ(Kernel(cfg, t).run("root", {}).exit_code, 0u);
}

// Binary fork tree: each level forks two children onto relative node
// fields 0 and 2^level (mod the cluster size), summing leaf values.
Task<uint32_t> tree_main(Process& p) {
  uint32_t depth = uint32_t(std::stoul(p.args().at(1)));
  uint32_t value = uint32_t(std::stoul(p.args().at(2)));
  if (depth == 0) {
    p.print("leaf " + std::to_string(value) + "\n");
    co_return value * value % 251;
  }
  uint32_t n = p.nodes();
  uint32_t total = 0;
  std::vector<uint32_t> pids;
  for (uint32_t side = 0; side < 2; ++side) {
    uint32_t field = side ? (1u << (depth - 1)) % n : 0;
    std::vector<std::string> args{std::to_string(depth - 1), std::to_string(value * 2 + side)};
    uint32_t pid = co_await p.fork("tree", args, field);
    pids.push_back(pid);
  }
  for (uint32_t pid : pids) {
    WaitStatus s = co_await p.waitpid(pid);
    total += s.code;
  }
  p.print("depth " + std::to_string(depth) + " total " + std::to_string(total) + "\n");
  co_return total % 256;
}

TEST(Cluster, ForkTreeOutputIsPlacementIndependent) {
  ProgramTable t;
  add_runtime_programs(t);
  add_process(t, "tree", tree_main);
  InputLog log;
  log.add(dev::kArgs, args_record({"tree", "3", "1"}));
  std::optional<SystemOutput> first;
  for (uint32_t n : {1u, 2u, 4u, 8u}) {
    KernelConfig cfg;
    cfg.cluster.nodes = n;
    RunResult r = Kernel(cfg, t).run("init", log);
    ASSERT_EQ(r.termination, Termination::kExit) << r.error;
    if (n > 1) EXPECT_GT(r.message_counts.migrate, 0u) << n;
    if (!first)
      first = r.output;
    else
      EXPECT_EQ(r.output, *first) << "nodes " << n;
  }
  EXPECT_NE(first->collect(dev::kConsoleOut).find("depth 3 total"), std::string::npos);
}

}  // namespace
}  // namespace detspace
