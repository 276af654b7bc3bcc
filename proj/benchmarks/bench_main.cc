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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "detspace/kernel.h"
#include "detspace/memimg.h"
#include "detspace/tools/runner.h"

namespace detspace {
namespace {

constexpr uint32_t kBase = 0x10000000;

// Child rewrites every `stride`-th byte of `pages` pages; merge back.
void BM_Merge(benchmark::State& state) {
  const uint32_t pages = uint32_t(state.range(0)), stride = uint32_t(state.range(1));
  MemoryImage parent;
  std::vector<uint8_t> fill(pages * kPageSize);
  std::mt19937 rng(1);
  for (auto& b : fill) b = uint8_t(rng());
  parent.write(kBase, fill);
  for (auto _ : state) {
    state.PauseTiming();
    MemoryImage child = parent;
    Snapshot snap = child.snapshot();
    for (uint32_t i = 0; i < pages * kPageSize; i += stride) {
      uint8_t v = uint8_t(fill[i] + 1);
      child.write(kBase + i, {&v, 1});
    }
    MemoryImage p = parent;
    state.ResumeTiming();
    MergeReport r = merge(p, child, snap, kBase, uint64_t(pages) * kPageSize);
    benchmark::DoNotOptimize(r);
  }
  state.SetBytesProcessed(int64_t(state.iterations()) * pages * kPageSize);
}
BENCHMARK(BM_Merge)->Args({4, 1})->Args({4, 64})->Args({64, 64})->Args({64, 4096});

// Interpreter throughput on a counted loop.
void BM_VmLoop(benchmark::State& state) {
  ProgramTable t;
  const ProgramInfo& p = t.add_vm_source("loop", R"(
start:
  LI r2, 1
  LI r3, 1000000
loop:
  ADD r1, r1, r2
  BNE r1, r3, loop
  LI r1, 0
  HALT
)");
  for (auto _ : state) {
    RunResult r = Kernel(KernelConfig{}, t).run(p, {});
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 2'000'000);
}
BENCHMARK(BM_VmLoop)->Unit(benchmark::kMillisecond);

// End-to-end corpus jobs under init.
void BM_Job(benchmark::State& state, std::vector<std::string> argv, ExecutorKind ex) {
  tools::RunConfig cfg;
  cfg.jobs.push_back(std::move(argv));
  cfg.executor = ex;
  ProgramTable programs = tools::build_programs(cfg);
  InputLog input = tools::build_input(cfg);
  for (auto _ : state) {
    tools::RunReport r = tools::run_config(cfg, programs, input);
    if (r.result.exit_code != 0) state.SkipWithError("job failed");
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK_CAPTURE(BM_Job, hello, {"hello"}, ExecutorKind::kSerial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Job, matmult64_serial, {"matmult", "64", "4", "1"}, ExecutorKind::kSerial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Job, matmult64_parallel, {"matmult", "64", "4", "1"},
                  ExecutorKind::kParallel)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Job, qsort10k, {"qsort", "10000", "4", "1", "random"},
                  ExecutorKind::kSerial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Job, pmake, {"pmake", "2"}, ExecutorKind::kSerial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Job, prodcons, {"dsched", "prodcons", "50"}, ExecutorKind::kSerial)
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace detspace

BENCHMARK_MAIN();
