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
#include <string>
#include <string_view>
#include <vector>

#include "detspace/digest.h"
#include "detspace/program.h"

namespace detspace::tools {

struct CorpusOptions {
  // Registers `nondet`, a host program that prints a process-global
  // counter. Only tests enable it: it exists to prove selfcheck works.
  bool test_backdoor = false;
};

// Registers init, vmhost, the dsched runner and every corpus program:
//
//   hello                         prints a greeting
//   echo ARGS...                  prints its arguments
//   cat [PATH...]                 prints files, or console input
//   md5search HEX MAXLEN THREADS  brute-force preimage over [a-z]{1,MAXLEN}
//   md5tree HEX MAXLEN DEPTH      the same search as a fork tree over nodes
//   md5vm                         VM search for md5("fox"), up to 3 chars
//   matmult N THREADS SEED        N x N product of LCG matrices, VM workers
//   qsort N THREADS SEED PATTERN  PATTERN: random sorted reverse constant
//   pmake WORKERS NAME:COST...    parallel make with a worker quota
//   writers PROCS LINES SEED      interleaved console writers
//   revisit ROUNDS PAGES          revisits a remote node with unchanged data
//   swap                          x = y and y = x in two threads
//   dsched VMPROG [QUANTUM]       VM programs prodcons, mutexcount
//
// Thread workers and VM bodies are registered under dotted names
// (md5search.worker, matmult.worker, ...).
void add_corpus(ProgramTable& t, const CorpusOptions& opts = {});
ProgramTable make_corpus(const CorpusOptions& opts = {});

// Inputs shared by matmult and its tests: `count` values in [0, 1000)
// from the LCG x = x * 1103515245 + 12345, taking bits 16..30.
std::vector<uint32_t> lcg_values(uint32_t seed, size_t count);

// qsort input for a pattern name; throws std::invalid_argument.
std::vector<uint32_t> qsort_input(std::string_view pattern, size_t n, uint32_t seed);

// Search order of md5search: lengths 1..maxlen, lexicographic within a
// length, over [a-z].
inline constexpr std::string_view kMd5Alphabet = "abcdefghijklmnopqrstuvwxyz";

// Files the programs write.
inline constexpr std::string_view kMatmultOut = "/out/matmult.bin";
inline constexpr std::string_view kQsortOut = "/out/qsort.bin";
inline constexpr std::string_view kMd5Out = "/out/md5.txt";
inline constexpr std::string_view kPmakeTrace = "/trace/pmake.log";

// Assembly of the VM corpus, without the scheduler prelude.
std::string_view md5vm_source();
std::string_view matmult_worker_source();
std::string_view prodcons_source();
std::string_view mutexcount_source();

// writers: child `w` syncs after line `j` (0-based) when this holds.
bool writer_syncs_after(uint32_t seed, uint32_t w, uint32_t j);

}  // namespace detspace::tools
