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

#include <coroutine>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <optional>
#include <string>

#include "detspace/cluster.h"
#include "detspace/guest.h"
#include "detspace/isa.h"
#include "detspace/memimg.h"
#include "detspace/syscall.h"
#include "detspace/task.h"

namespace detspace {

struct KernelState;
class ProgramTable;

enum class SpaceState : uint8_t { kStopped, kRunnable, kRunning, kBlocked };

// Suspended state of a host-task guest.
struct HostContext {
  explicit HostContext(Space* s) : guest(s) {}
  Guest guest;
  Task<uint32_t> task;
  uint32_t pc = 0;  // pseudo-pc the task was started from
  std::coroutine_handle<> resume_point;
  std::optional<SysArgs> request;
  std::optional<RegisterFile> jump;
  SysResult result;
};

struct Space {
  Space(std::string k, Space* p, uint32_t num, uint32_t home, bool track)
      : key(std::move(k)), parent(p), number(num), tracker(key, home, track) {}

  std::string key;
  Space* parent;
  uint32_t number;
  std::map<uint32_t, std::unique_ptr<Space>> children;
  uint32_t incarnations = 0;

  RegisterFile regs;
  MemoryImage mem;
  std::optional<Snapshot> snap;
  SpaceState state = SpaceState::kStopped;
  StopStatus status;
  bool privileged = false;
  std::optional<uint64_t> budget;  // remaining instructions; none = unlimited
  uint64_t insns = 0;

  SpaceTracker tracker;
  std::optional<SysArgs> pending;  // syscall waiting for a rendezvous
  std::unique_ptr<HostContext> host;
  KernelState* kernel = nullptr;
  const ProgramTable* programs = nullptr;
  std::ostream* debug = nullptr;
  std::mutex* debug_mu = nullptr;
};

}  // namespace detspace
