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
#include <vector>

#include "detspace/isa.h"
#include "detspace/memimg.h"
#include "detspace/vm.h"

namespace detspace {

enum class Call : uint8_t { kPut = 0, kGet = 1, kRet = 2, kDevWrite = 3, kDevRead = 4 };

// Option bits for Put and Get.
namespace opt {
inline constexpr uint32_t kRegs = 1;
inline constexpr uint32_t kCopy = 2;
inline constexpr uint32_t kZero = 4;
inline constexpr uint32_t kSnap = 8;
inline constexpr uint32_t kStart = 16;
inline constexpr uint32_t kMerge = 32;
inline constexpr uint32_t kPerm = 64;
inline constexpr uint32_t kTree = 128;
inline constexpr uint32_t kAll = 255;
}  // namespace opt

// Guest-visible error codes; VM guests see them negated in r1.
enum class ApiError : uint32_t {
  kOk = 0,
  kBadCall = 1,
  kBadOption = 2,     // option not allowed for this call
  kBadRange = 3,      // unaligned or overflowing range
  kBadPerm = 4,
  kBadNode = 5,       // node field names no node
  kNoSnapshot = 6,    // Merge without a prior Snap
  kNoChild = 7,
  kNotPermitted = 8,  // root Ret, unprivileged device access
  kBadRegs = 9,       // register block unreadable
  kTooLong = 10,      // device record longer than the buffer
  kFault = 11,        // caller buffer not accessible
};

const char* to_string(ApiError e);

enum class StopReason : uint8_t {
  kNone = 0,
  kRet = 1,
  kTrap = 2,
  kInsnLimit = 3,
  kConflict = 4,
};

const char* to_string(StopReason r);

struct StopStatus {
  StopReason reason = StopReason::kNone;
  uint32_t code = 0;  // exit code for kRet
  TrapKind trap = TrapKind::kNone;
  uint32_t fault_addr = 0;
  uint32_t conflicts = 0;
  uint32_t first_conflict = 0;
  friend bool operator==(const StopStatus&, const StopStatus&) = default;
};

struct SysArgs {
  Call call = Call::kPut;
  uint32_t child = 0;
  uint32_t options = 0;
  uint64_t src = 0;
  uint64_t dst = 0;
  uint64_t len = 0;
  uint32_t perm = 3;
  uint64_t limit = 0;  // 0 = unlimited
  uint32_t code = 0;   // Ret exit code, device id for dev_*
  RegisterFile regs;   // Put(Regs) payload
};

struct SysResult {
  ApiError err = ApiError::kOk;
  StopStatus status;                     // Get/Put: child's stop status
  RegisterFile regs;                     // Get(Regs)
  std::vector<MergeConflict> conflicts;  // Get(Merge)
  uint32_t count = 0;                    // dev_read byte count
  bool eof = false;                      // dev_read: no record left
  bool ok() const { return err == ApiError::kOk; }
};

// Builds a child number from a node field and a local number.
constexpr uint32_t child_number(uint32_t node_field, uint32_t local) {
  return (node_field & 31) << 11 | (local & 0x7ff);
}

}  // namespace detspace
