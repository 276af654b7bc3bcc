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

#include "detspace/guest.h"

#include <exception>
#include <iostream>
#include <mutex>

#include "detspace/kernel.h"
#include "space.h"

namespace detspace {

GuestFault::GuestFault(uint32_t addr)
    : std::runtime_error("guest access fault"), addr_(addr) {}

void SysAwaiter::await_suspend(std::coroutine_handle<> h) {
  s_->host->request = std::move(args_);
  s_->host->resume_point = h;
}

SysResult SysAwaiter::await_resume() { return std::move(s_->host->result); }

void JumpAwaiter::await_suspend(std::coroutine_handle<> h) {
  s_->host->jump = regs_;
  s_->host->resume_point = h;
}

void JumpAwaiter::await_resume() { std::terminate(); }

void Guest::read(uint32_t addr, std::span<uint8_t> out) const {
  uint32_t where = 0;
  if (!s_->mem.guest_read(addr, out, &where)) throw GuestFault(where);
}

void Guest::write(uint32_t addr, std::span<const uint8_t> in) {
  uint32_t where = 0;
  if (!s_->mem.guest_write(addr, in, &where)) throw GuestFault(where);
}

uint32_t Guest::load32(uint32_t addr) const {
  uint8_t b[4];
  read(addr, b);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void Guest::store32(uint32_t addr, uint32_t v) {
  uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
  write(addr, b);
}

uint8_t Guest::load8(uint32_t addr) const {
  uint8_t b;
  read(addr, std::span<uint8_t>(&b, 1));
  return b;
}

void Guest::store8(uint32_t addr, uint8_t v) { write(addr, std::span<const uint8_t>(&v, 1)); }

std::string Guest::read_string(uint32_t addr, uint32_t len) const {
  std::string s(len, '\0');
  read(addr, std::span<uint8_t>(reinterpret_cast<uint8_t*>(s.data()), s.size()));
  return s;
}

void Guest::write_string(uint32_t addr, std::string_view s) {
  write(addr, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

bool Guest::mapped(uint32_t addr, uint32_t len) const { return s_->mem.range_mapped(addr, len); }

const RegisterFile& Guest::regs() const { return s_->regs; }

bool Guest::privileged() const { return s_->privileged; }

const ProgramTable& Guest::programs() const { return *s_->programs; }

void Guest::debug_print(std::string_view line) const {
  if (!s_->debug) return;
  std::lock_guard lk(*s_->debug_mu);
  *s_->debug << "[" << s_->key << "] " << line << '\n';
  s_->debug->flush();
}

}  // namespace detspace
