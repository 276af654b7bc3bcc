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
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "detspace/cluster.h"
#include "detspace/io_log.h"
#include "detspace/layout.h"
#include "detspace/program.h"
#include "detspace/syscall.h"

namespace detspace {

enum class ExecutorKind { kSerial, kParallel };
const char* to_string(ExecutorKind k);

// Fields of the read-only page at layout::kSysInfoBase that the loader
// writes for the root space.
namespace sysinfo {
inline constexpr uint32_t kMagic = 0x53595344;  // "DSYS"
inline constexpr uint32_t kMagicOff = 0;
inline constexpr uint32_t kNodesOff = 4;
inline constexpr uint32_t kFsSizeOff = 8;
inline constexpr uint32_t kQuantumOff = 12;
}  // namespace sysinfo

struct AuditEvent {
  std::string space;
  Call call = Call::kPut;
  uint32_t child = 0;
  uint32_t options = 0;
};

struct KernelConfig {
  ExecutorKind executor = ExecutorKind::kSerial;
  uint32_t workers = 4;       // parallel executor only
  uint64_t seed = 1;          // parallel executor pick/slice randomness
  uint32_t max_slice = 20000;  // VM instructions per scheduling slice
  ClusterConfig cluster;
  uint32_t fs_size = layout::kFsDefaultSize;
  uint64_t quantum = 10'000'000;
  // Immediate debug console; never part of the SystemOutput.
  std::ostream* debug_console = nullptr;
  // Called under the kernel lock on every syscall entry.
  std::function<void(const AuditEvent&)> audit;
};

enum class Termination { kExit, kTrap, kDeadlock, kError };
const char* to_string(Termination t);

struct RunResult {
  SystemOutput output;
  Termination termination = Termination::kExit;
  uint32_t exit_code = 0;
  TrapKind trap = TrapKind::kNone;
  std::string error;  // kError only
  // Cluster messages of every space, sorted by (space, seq).
  std::vector<Message> messages;
  MessageCounts message_counts;
  uint64_t instructions = 0;  // counted instructions of surviving spaces
  uint64_t syscalls = 0;
  uint64_t spaces = 0;
  // SHA-256 over the root's final registers and memory. Descendants still
  // running when the root stops are left out: their state depends on timing.
  std::string state_hash;

  std::string status_line() const;
};

// Runs `root` as the privileged root space over `input`. The loader maps the
// standard layout (code, sysinfo, heap, shared, stack, runtime and file
// system regions); a VM root also gets its code.
class Kernel {
 public:
  Kernel(KernelConfig cfg, const ProgramTable& programs);
  ~Kernel();
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  RunResult run(const ProgramInfo& root, const InputLog& input);
  RunResult run(const std::string& root, const InputLog& input);

 private:
  struct Impl;
  KernelConfig cfg_;
  const ProgramTable& programs_;
};

}  // namespace detspace
