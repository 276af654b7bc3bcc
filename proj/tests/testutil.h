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
#include <random>
#include <string>
#include <vector>

#include "detspace/kernel.h"
#include "detspace/memimg.h"
#include "detspace/tools/runner.h"

namespace detspace::testing {

// Independent reference for merge: a plain per-byte loop over the range.
struct OracleMerge {
  std::vector<uint8_t> parent;  // parent bytes after the merge
  std::vector<MergeConflict> conflicts;
  uint64_t copied = 0;
};
OracleMerge oracle_merge(const MemoryImage& parent, const MemoryImage& child,
                         const Snapshot& snap, uint32_t addr, uint32_t len);

// Byte view of a range; unmapped bytes read as zero.
std::vector<uint8_t> bytes_of(const MemoryImage& m, uint32_t addr, uint32_t len);
std::vector<uint8_t> bytes_of(const Snapshot& s, uint32_t addr, uint32_t len);

// Fills `pages` pages at `addr` with random bytes.
void fill_random(MemoryImage& m, uint32_t addr, uint32_t pages, std::mt19937& rng);

// Runs a VM root program assembled from `source`.
RunResult run_vm(const std::string& source, KernelConfig cfg = {}, const InputLog& log = {});

// Runs one corpus job under init.
tools::RunReport run_job(std::vector<std::string> argv, tools::RunConfig cfg = {},
                         bool test_backdoor = false);

// A file from a report's final file system; fails the test when absent.
std::string fs_file(const tools::RunReport& r, const std::string& path);

// Little-endian words of a byte string.
std::vector<uint32_t> le_words(const std::string& bytes);

struct CliResult {
  int exit_code = -1;
  std::string out;  // stdout
};
// Runs a command line through the shell; stderr is discarded.
CliResult run_cli(const std::string& command);

}  // namespace detspace::testing
