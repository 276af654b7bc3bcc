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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "detspace/assembler.h"
#include "detspace/task.h"

namespace detspace {

class Guest;

// Body of a host-task guest. It must be a pure function of its space's
// memory and syscall results; the returned value becomes its exit code.
using HostFn = std::function<Task<uint32_t>(Guest&)>;

struct ProgramInfo {
  uint32_t id = 0;
  std::string name;
  std::optional<AsmProgram> vm;  // set for bytecode programs
  HostFn host;                   // set for host programs

  bool is_vm() const { return vm.has_value(); }
  // Entry pc: the assembled entry, or the host pseudo-pc.
  uint32_t entry_pc() const;
};

// Immutable catalogue of loadable programs, shared by the loader and by
// exec in the process runtime (it plays the part of a read-only disk).
class ProgramTable {
 public:
  const ProgramInfo& add_host(const std::string& name, HostFn fn);
  const ProgramInfo& add_vm(const std::string& name, AsmProgram prog);
  // Assembles `source`; throws AsmError.
  const ProgramInfo& add_vm_source(const std::string& name, std::string_view source);

  const ProgramInfo* find(const std::string& name) const;
  const ProgramInfo* by_id(uint32_t id) const;
  // Host program named by a pseudo-pc, or null.
  const ProgramInfo* host_at(uint32_t pc) const;
  std::vector<std::string> names() const;

 private:
  const ProgramInfo& add(ProgramInfo info);
  std::vector<std::unique_ptr<ProgramInfo>> programs_;
  std::map<std::string, uint32_t> by_name_;
};

}  // namespace detspace
