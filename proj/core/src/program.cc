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

#include "detspace/program.h"

#include <stdexcept>

#include "detspace/layout.h"

namespace detspace {

uint32_t ProgramInfo::entry_pc() const {
  return vm ? vm->entry : layout::kHostPcBase + id;
}

const ProgramInfo& ProgramTable::add(ProgramInfo info) {
  if (by_name_.count(info.name))
    throw std::invalid_argument("program '" + info.name + "' already registered");
  if (programs_.size() >= 0xffff) throw std::length_error("too many programs");
  info.id = uint32_t(programs_.size());
  by_name_[info.name] = info.id;
  programs_.push_back(std::make_unique<ProgramInfo>(std::move(info)));
  return *programs_.back();
}

const ProgramInfo& ProgramTable::add_host(const std::string& name, HostFn fn) {
  ProgramInfo info;
  info.name = name;
  info.host = std::move(fn);
  return add(std::move(info));
}

const ProgramInfo& ProgramTable::add_vm(const std::string& name, AsmProgram prog) {
  ProgramInfo info;
  info.name = name;
  info.vm = std::move(prog);
  return add(std::move(info));
}

const ProgramInfo& ProgramTable::add_vm_source(const std::string& name,
                                               std::string_view source) {
  return add_vm(name, assemble(source));
}

const ProgramInfo* ProgramTable::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : programs_[it->second].get();
}

const ProgramInfo* ProgramTable::by_id(uint32_t id) const {
  return id < programs_.size() ? programs_[id].get() : nullptr;
}

const ProgramInfo* ProgramTable::host_at(uint32_t pc) const {
  if (pc < layout::kHostPcBase) return nullptr;
  const ProgramInfo* p = by_id(pc - layout::kHostPcBase);
  return p && !p->is_vm() ? p : nullptr;
}

std::vector<std::string> ProgramTable::names() const {
  std::vector<std::string> out;
  for (auto& [name, id] : by_name_) out.push_back(name);
  return out;
}

}  // namespace detspace
