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
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "detspace/isa.h"
#include "detspace/syscall.h"
#include "detspace/task.h"

namespace detspace {

struct Space;
class ProgramTable;

// Thrown by guest memory accessors; the kernel turns it into an
// access-fault trap of the space.
class GuestFault : public std::runtime_error {
 public:
  explicit GuestFault(uint32_t addr);
  uint32_t addr() const { return addr_; }

 private:
  uint32_t addr_;
};

class SysAwaiter {
 public:
  SysAwaiter(Space* s, SysArgs args) : s_(s), args_(std::move(args)) {}
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> h);
  SysResult await_resume();

 private:
  Space* s_;
  SysArgs args_;
};

class JumpAwaiter {
 public:
  JumpAwaiter(Space* s, const RegisterFile& regs) : s_(s), regs_(regs) {}
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> h);
  [[noreturn]] void await_resume();

 private:
  Space* s_;
  RegisterFile regs_;
};

// The whole interface a host-task guest has to the world: its own memory
// (with guest permissions), its entry registers, and the kernel calls.
class Guest {
 public:
  explicit Guest(Space* s) : s_(s) {}

  void read(uint32_t addr, std::span<uint8_t> out) const;
  void write(uint32_t addr, std::span<const uint8_t> in);
  uint32_t load32(uint32_t addr) const;
  void store32(uint32_t addr, uint32_t v);
  uint8_t load8(uint32_t addr) const;
  void store8(uint32_t addr, uint8_t v);
  std::string read_string(uint32_t addr, uint32_t len) const;
  void write_string(uint32_t addr, std::string_view s);
  bool mapped(uint32_t addr, uint32_t len) const;

  // Registers the space was started with.
  const RegisterFile& regs() const;
  bool privileged() const;
  const ProgramTable& programs() const;

  SysAwaiter syscall(SysArgs a) { return SysAwaiter(s_, std::move(a)); }
  SysAwaiter put(SysArgs a) {
    a.call = Call::kPut;
    return syscall(std::move(a));
  }
  SysAwaiter get(SysArgs a) {
    a.call = Call::kGet;
    return syscall(std::move(a));
  }
  SysAwaiter ret(uint32_t code) {
    SysArgs a;
    a.call = Call::kRet;
    a.code = code;
    return syscall(a);
  }
  // Reads the next input record for `device` into [dst, dst+maxlen).
  SysAwaiter dev_read(uint32_t device, uint32_t dst, uint32_t maxlen) {
    SysArgs a;
    a.call = Call::kDevRead;
    a.code = device;
    a.dst = dst;
    a.len = maxlen;
    return syscall(a);
  }
  SysAwaiter dev_write(uint32_t device, uint32_t src, uint32_t len) {
    SysArgs a;
    a.call = Call::kDevWrite;
    a.code = device;
    a.src = src;
    a.len = len;
    return syscall(a);
  }
  // Replaces this control flow with `regs` without involving any other
  // space. Never resumes.
  JumpAwaiter jump(const RegisterFile& regs) { return JumpAwaiter(s_, regs); }

  // Immediate host console line, outside every normative output. No-op
  // unless the run enables the debug console.
  void debug_print(std::string_view line) const;

 private:
  Space* s_;
};

}  // namespace detspace
