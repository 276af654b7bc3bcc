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
#include <utility>
#include <vector>

#include "detspace/io_log.h"
#include "detspace/kernel.h"

namespace detspace::tools {

// Everything needed to reproduce a run. Serializes to one line of JSON,
// which every report embeds.
struct RunConfig {
  std::vector<std::vector<std::string>> jobs;  // argv per job, run in order
  std::string input_log;  // recorded input log, loaded before the jobs
  std::vector<std::pair<std::string, std::string>> files;  // guest path, host path
  std::string console_in;
  std::vector<std::string> vm_files;  // .s or .bin, registered by file stem
  ExecutorKind executor = ExecutorKind::kSerial;
  uint64_t seed = 1;
  uint32_t workers = 4;
  uint32_t max_slice = 20000;
  uint32_t nodes = 1;
  uint64_t quantum = 10'000'000;
  uint32_t fs_size = layout::kFsDefaultSize;
  bool debug_console = false;
  bool message_trace = false;  // print the cluster message trace

  std::string to_json() const;
  // Throws std::invalid_argument.
  static RunConfig from_json(const std::string& text);
  KernelConfig kernel_config() const;
};

// Input log for a config: the recorded log, then files, console input and
// one ARGS record per job. Throws std::runtime_error on unreadable files.
InputLog build_input(const RunConfig& cfg);

// Catalogue for a config: the corpus plus the config's VM files.
ProgramTable build_programs(const RunConfig& cfg, bool test_backdoor = false);

struct RunReport {
  RunConfig config;
  RunResult result;
  std::string console;  // root console bytes
  std::string fs;       // final serialized file system (empty if none)
  std::string traces;   // /trace/* files, "path\n" + content each
  double wall_ms = 0;   // informational

  std::string output_sha256() const;
  // Line-oriented report. Every line but `wall_ms` is a function of the
  // config and the input.
  std::string text() const;
  // The same without timing, for comparison.
  std::string normative_text() const;
};

RunReport run_config(const RunConfig& cfg, const ProgramTable& programs,
                     const InputLog& input);

struct SelfcheckVariant {
  ExecutorKind executor;
  uint64_t seed;
  uint32_t nodes;
  std::string label() const;
};

struct SelfcheckResult {
  bool pass = true;
  std::vector<SelfcheckVariant> variants;
  std::vector<std::string> hashes;  // output_sha256 per variant
  std::string diff;                 // first mismatch, when !pass
  std::string text() const;
};

// Variants: serial, then runs-1 parallel seeds, each repeated per entry of
// `node_counts` (empty: the config's own). Compares SystemOutput, the file
// system and the sync traces byte for byte against the first run.
SelfcheckResult selfcheck(const RunConfig& cfg, const ProgramTable& programs, uint32_t runs,
                          const std::vector<uint32_t>& node_counts = {});

// First offset where `a` and `b` differ, or npos.
size_t first_difference(std::string_view a, std::string_view b);

}  // namespace detspace::tools
