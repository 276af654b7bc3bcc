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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "detspace/fs.h"
#include "detspace/guest.h"
#include "detspace/program.h"
#include "detspace/syscall.h"
#include "detspace/task.h"

namespace detspace {

// Ret codes at or above kRequestBase are runtime requests to the parent,
// not exits. A VM job prints with Ret(kPrint), r3 = address, r4 = length.
namespace rt {
inline constexpr uint32_t kRequestBase = 0x10000;
inline constexpr uint32_t kIoRequest = 0x10001;
inline constexpr uint32_t kFsync = 0x10002;
inline constexpr uint32_t kBarrier = 0x10003;
inline constexpr uint32_t kSched = 0x10004;
inline constexpr uint32_t kPrint = 0x10005;

inline constexpr uint32_t kExecChild = 255;    // reserved for exec
inline constexpr uint32_t kHelperChild = 254;  // vmhost job, memory mapping
inline constexpr uint32_t kForkChildren = 254;  // local numbers 0..253

inline constexpr uint32_t kMaxExit = 0xffff;
}  // namespace rt

class ProcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WaitStatus {
  uint32_t pid = 0;
  StopReason reason = StopReason::kNone;
  uint32_t code = 0;
  TrapKind trap = TrapKind::kNone;
  bool exited() const { return reason == StopReason::kRet; }
  std::string to_string() const;
  friend bool operator==(const WaitStatus&, const WaitStatus&) = default;
};

// Unix-style process state of one space: local PID table, file system
// replica, console and argument vector. All state that must survive a
// synchronization lives in the space's memory.
class Process {
 public:
  explicit Process(Guest& g) : g_(g), fs_(0) {}
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  // Called once by the program wrapper before main.
  Task<void> start();
  // Writes the replica back; called by the wrapper after main.
  void finish();

  Guest& guest() { return g_; }
  bool is_root() const { return g_.privileged(); }
  uint32_t id() const { return id_; }
  const std::vector<std::string>& args() const { return args_; }
  uint32_t nodes() const { return nodes_; }
  uint64_t quantum() const { return quantum_; }

  FsImage& fs() { return fs_; }
  // Appends to the console output file.
  void print(std::string_view text);
  // Up to `max` console bytes; nullopt once input has ended.
  Task<std::optional<std::string>> read_console(size_t max);
  // Propagates this replica toward the root now.
  Task<void> fsync();

  // Starts `program` in a new child with a copy of this space. VM programs
  // run under vmhost. Throws ProcError on exhaustion or an unknown program.
  Task<uint32_t> fork(std::string_view program, std::vector<std::string> args,
                      uint32_t node_field = 0);
  Task<WaitStatus> waitpid(uint32_t pid);
  // Earliest-forked uncollected child; nullopt when there is none.
  Task<std::optional<WaitStatus>> wait();
  // Replaces this program. Returns only on failure.
  Task<bool> exec(std::string_view program, std::vector<std::string> args);

  // Child numbers for other runtimes (thread groups) sharing the namespace.
  uint32_t allocate_child();
  void release_child(uint32_t local);

  // Brings a child's replica up to date with ours (and ours with its).
  // `resume` restarts it afterwards. Used by waitpid and thread joins.
  Task<void> sync_child(uint32_t child, bool needs_input, bool resume);

  // Replica to and from its memory region, for runtimes that copy the
  // region into other spaces.
  void flush();
  void reload();

  // Maps [addr, addr+len) zero-filled in this space.
  Task<void> map_zero(uint32_t addr, uint32_t len);
  // Copies code bytes into the runtime scratch area for Put(Copy).
  void stage(uint32_t at, std::span<const uint8_t> bytes);

 private:
  uint32_t load(uint32_t off) const;
  void store(uint32_t off, uint32_t v);
  Task<void> obtain_input();
  Task<void> emit_console();
  void write_spawn(uint32_t kind, uint32_t id, const std::vector<std::string>& argv);
  const ProgramInfo& resolve(std::string_view program, std::vector<std::string>& argv) const;

  Guest& g_;
  FsImage fs_;
  std::string stored_;  // last serialization written to the region
  std::vector<std::string> args_;
  uint32_t id_ = 1;
  uint32_t nodes_ = 1;
  uint32_t fs_size_ = 0;
  uint64_t quantum_ = 0;
};

using ProcMain = std::function<Task<uint32_t>(Process&)>;

// Registers a process program: the wrapper runs start(), main, finish().
const ProgramInfo& add_process(ProgramTable& t, const std::string& name, ProcMain main);

// Registers `init` (the root: loads FILE/CLOCK/ARGS records, runs each job,
// streams console output and writes the fs dump and status records) and
// `vmhost` (runs a VM program as a job).
void add_runtime_programs(ProgramTable& t);

// Input log helpers used by the CLI and tests.
std::string file_record(std::string_view path, std::string_view content);
std::string args_record(const std::vector<std::string>& argv);
std::vector<std::string> split_args(std::string_view rec);

}  // namespace detspace
