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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "detspace/digest.h"
#include "detspace/tools/corpus.h"
#include "detspace/tools/runner.h"
#include "testutil.h"

namespace detspace {
namespace {

using testing::fs_file;
using testing::le_words;
using testing::run_cli;
using testing::run_job;
using tools::RunConfig;

const std::string kCli = DETSPACE_CLI;
const std::string kTestCli = DETSPACE_TESTCLI;

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "detspace_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

RunConfig parallel(uint64_t seed) {
  RunConfig c;
  c.executor = ExecutorKind::kParallel;
  c.seed = seed;
  c.workers = 3;
  c.max_slice = 301;
  return c;
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c;
  c.jobs = {{"echo", "a b", "c"}, {"hello"}};
  c.files = {{"/in/x", "/tmp/x"}};
  c.console_in = "line\n";
  c.vm_files = {"/tmp/p.s"};
  c.executor = ExecutorKind::kParallel;
  c.seed = 99;
  c.workers = 7;
  c.max_slice = 5;
  c.nodes = 4;
  c.quantum = 123;
  c.fs_size = 1 << 20;
  c.debug_console = true;
  c.message_trace = true;
  RunConfig d = RunConfig::from_json(c.to_json());
  EXPECT_EQ(d.to_json(), c.to_json());
  EXPECT_EQ(d.jobs, c.jobs);
  EXPECT_EQ(d.nodes, 4u);
}

TEST(RunConfigTest, RejectsMalformedJson) {
  EXPECT_THROW(RunConfig::from_json("{"), std::invalid_argument);
  EXPECT_THROW(RunConfig::from_json("{\"jobs\": []}"), std::invalid_argument);
  RunConfig c;
  std::string j = c.to_json();
  j.replace(j.find("\"serial\""), 8, "\"bogus\"");
  EXPECT_THROW(RunConfig::from_json(j), std::invalid_argument);
}

// The md5 target words in md5vm must be md5("fox"), little-endian.
TEST(CorpusTest, Md5VmFindsWhatHostSearchFinds) {
  auto vm = run_job({"md5vm"});
  auto host = run_job({"md5search", to_hex(md5("fox")), "3", "2"});
  EXPECT_EQ(vm.result.exit_code, 0);
  EXPECT_EQ(vm.console, "found fox\n");
  EXPECT_EQ(host.console, "found fox\n");
  EXPECT_EQ(to_hex(md5(fs_file(host, std::string(tools::kMd5Out)))), to_hex(md5("fox")));
}

TEST(CorpusTest, Md5SearchReportsAbsentPreimage) {
  auto r = run_job({"md5search", to_hex(md5("abcd")), "2", "2"});
  EXPECT_NE(r.result.exit_code, 0);
}

TEST(CorpusTest, LcgMatchesFormula) {
  std::vector<uint32_t> v = tools::lcg_values(7, 3);
  uint32_t x = 7;
  for (uint32_t e : v) {
    x = x * 1103515245u + 12345u;
    EXPECT_EQ(e, (x / 65536) % 32768 % 1000);
  }
}

TEST(CorpusTest, MatmultMatchesNaiveProduct) {
  const uint32_t n = 24;
  auto r = run_job({"matmult", std::to_string(n), "3", "5"}, parallel(4));
  ASSERT_EQ(r.result.exit_code, 0) << r.result.error;
  std::vector<uint32_t> a = tools::lcg_values(5, n * n), b = tools::lcg_values(6, n * n);
  std::vector<uint32_t> c(n * n, 0);
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < n; ++j)
      for (uint32_t k = 0; k < n; ++k) c[i * n + j] += a[i * n + k] * b[k * n + j];
  EXPECT_EQ(le_words(fs_file(r, std::string(tools::kMatmultOut))), c);
}

TEST(CorpusTest, QsortMatchesHostSortForEveryPattern) {
  for (const char* pat : {"random", "sorted", "reverse", "constant"}) {
    auto r = run_job({"qsort", "3000", "3", "9", pat});
    ASSERT_EQ(r.result.exit_code, 0) << pat;
    std::vector<uint32_t> want = tools::qsort_input(pat, 3000, 9);
    std::sort(want.begin(), want.end());
    EXPECT_EQ(le_words(fs_file(r, std::string(tools::kQsortOut))), want) << pat;
  }
}

TEST(CorpusTest, WritersPrintEveryLineOnce) {
  auto r = run_job({"writers", "4", "6", "3"}, parallel(2));
  ASSERT_EQ(r.result.exit_code, 0);
  std::map<std::string, int> seen;
  std::istringstream in(r.console);
  for (std::string line; std::getline(in, line);) ++seen[line];
  EXPECT_EQ(seen.size(), 24u);
  for (auto& [line, count] : seen) EXPECT_EQ(count, 1) << line;
}

TEST(CorpusTest, DschedProgramsSucceed) {
  for (const char* prog : {"prodcons", "mutexcount"}) {
    auto r = run_job({"dsched", prog, "37"});
    EXPECT_EQ(r.result.exit_code, 0) << prog;
    EXPECT_NE(r.traces.find("/trace/dsched.log\n"), std::string::npos);
  }
}

TEST(CorpusTest, TinyQuantumStillMakesProgress) {
  auto r = run_job({"dsched", "prodcons", "1"});
  EXPECT_EQ(r.result.exit_code, 0);
}

TEST(ReportTest, NormativeTextIgnoresExecutor) {
  RunConfig serial;
  auto a = run_job({"pmake", "2"}, serial);
  auto b = run_job({"pmake", "2"}, parallel(17));
  EXPECT_EQ(a.result.output.encode(), b.result.output.encode());
  EXPECT_EQ(a.output_sha256(), b.output_sha256());
  EXPECT_EQ(a.traces, b.traces);
  EXPECT_EQ(a.normative_text().find("wall_ms"), std::string::npos);
}

TEST(SelfcheckTest, PassesOnCorpus) {
  RunConfig c;
  c.jobs = {{"swap"}, {"writers", "2", "4", "1"}};
  auto res = tools::selfcheck(c, tools::build_programs(c), 3);
  EXPECT_TRUE(res.pass) << res.diff;
  EXPECT_EQ(res.hashes.size(), 3u);
}

// Negative control: a guest that reads host state must be caught.
TEST(SelfcheckTest, CatchesNondeterministicGuest) {
  RunConfig c;
  c.jobs = {{"nondet"}};
  auto res = tools::selfcheck(c, tools::build_programs(c, true), 3);
  EXPECT_FALSE(res.pass);
  EXPECT_NE(res.diff.find("differs"), std::string::npos);
}

TEST(SelfcheckTest, FirstDifference) {
  EXPECT_EQ(tools::first_difference("abc", "abc"), std::string_view::npos);
  EXPECT_EQ(tools::first_difference("abc", "abd"), 2u);
  EXPECT_EQ(tools::first_difference("ab", "abc"), 2u);
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli(kCli + " run hello").exit_code, 0);
  EXPECT_EQ(run_cli(kCli + " run hello").out, "hello, world\n");
  EXPECT_EQ(run_cli(kCli + " run no-such-program").exit_code, 1);
  EXPECT_EQ(run_cli(kCli + " run").exit_code, 3);
  EXPECT_EQ(run_cli(kCli + " run --nodes 99 hello").exit_code, 3);
  EXPECT_EQ(run_cli(kCli + " frobnicate").exit_code, 3);
  // The release CLI does not know the test-only program.
  EXPECT_EQ(run_cli(kCli + " run nondet").exit_code, 1);
}

TEST(CliTest, SelfcheckExitCodes) {
  auto ok = run_cli(kTestCli + " selfcheck --runs 3 --node-counts 1,2 swap");
  EXPECT_EQ(ok.exit_code, 0);
  EXPECT_NE(ok.out.find("selfcheck PASS 6 runs"), std::string::npos) << ok.out;
  auto bad = run_cli(kTestCli + " selfcheck --runs 3 nondet");
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_NE(bad.out.find("selfcheck FAIL"), std::string::npos);
}

TEST(CliTest, RecordThenReplay) {
  std::string in = scratch("rec.in").string(), out = scratch("rec.out").string();
  auto rec = run_cli(kCli + " record -o " + in + " --save-output " + out + " writers 2 3 4");
  ASSERT_EQ(rec.exit_code, 0);
  auto rep = run_cli(kCli + " replay " + in + " --expect " + out);
  EXPECT_EQ(rep.exit_code, 0);
  EXPECT_EQ(rep.out, rec.out);
  // A different run's output must not pass as this one.
  std::string other = scratch("other.out").string();
  ASSERT_EQ(run_cli(kCli + " record -o " + scratch("o.in").string() + " --save-output " + other +
                    " echo different")
                .exit_code,
            0);
  EXPECT_EQ(run_cli(kCli + " replay " + in + " --expect " + other).exit_code, 2);
}

TEST(CliTest, ConfigFileReproducesRun) {
  std::string cfg = scratch("cfg.json").string();
  RunConfig c;
  c.jobs = {{"echo", "from", "config"}};
  std::ofstream(cfg) << c.to_json();
  auto r = run_cli(kCli + " run --config " + cfg);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "from config\n");
}

TEST(CliTest, AssembleDisassembleRun) {
  std::string src = scratch("hi.s").string(), bin = scratch("hi.bin").string();
  std::ofstream(src) << "start:\n  LI r1, 3\n  HALT\n";
  ASSERT_EQ(run_cli(kCli + " asm " + src + " -o " + bin).exit_code, 0);
  EXPECT_TRUE(std::filesystem::exists(bin));
  auto dis = run_cli(kCli + " disasm " + bin);
  EXPECT_EQ(dis.exit_code, 0);
  EXPECT_NE(dis.out.find("LI"), std::string::npos) << dis.out;
  EXPECT_NE(dis.out.find("HALT"), std::string::npos) << dis.out;
  // Source and image run the same.
  auto a = run_cli(kCli + " run --vm " + src + " hi");
  auto b = run_cli(kCli + " run --vm " + bin + " hi");
  EXPECT_EQ(a.exit_code, b.exit_code);
  EXPECT_EQ(a.out, b.out);
}

TEST(CliTest, BenchChecksResults) {
  for (const char* b : {"md5 --size 2", "matmult --size 16 --threads 2", "qsort --size 500"}) {
    auto r = run_cli(kCli + " bench " + b);
    EXPECT_EQ(r.exit_code, 0) << b;
    EXPECT_NE(r.out.find("check=ok"), std::string::npos) << r.out;
  }
}

}  // namespace
}  // namespace detspace
