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

// Fixed address-space layout shared by the loader and the user-level
// runtime. All regions are page aligned.
namespace detspace::layout {

inline constexpr uint32_t kCodeBase = 0x0001'0000;
inline constexpr uint32_t kCodeSize = 0x0010'0000;  // 1 MiB

// Read-only page written by the loader: see SysInfo in kernel.h.
inline constexpr uint32_t kSysInfoBase = 0x0000'8000;

inline constexpr uint32_t kHeapBase = 0x1000'0000;
inline constexpr uint32_t kHeapSize = 0x0040'0000;  // 4 MiB

// Top megabyte of the heap belongs to the runtime: code staging, device
// buffers and copy windows.
inline constexpr uint32_t kRuntimeScratch = kHeapBase + kHeapSize - 0x0010'0000;
inline constexpr uint32_t kRuntimeScratchSize = 0x0010'0000;

// Default shared region for thread groups.
inline constexpr uint32_t kSharedBase = 0x2000'0000;
inline constexpr uint32_t kSharedSize = 0x0040'0000;  // 4 MiB

// Private stacks overlap across threads by default.
inline constexpr uint32_t kStackBase = 0x7000'0000;
inline constexpr uint32_t kStackSize = 0x0001'0000;  // 64 KiB
inline constexpr uint32_t kStackTop = kStackBase + kStackSize;

// Runtime state carried across fork/exec.
inline constexpr uint32_t kProcBase = 0x8000'0000;
inline constexpr uint32_t kProcSize = 0x0001'0000;
inline constexpr uint32_t kArgsBase = 0x8001'0000;
inline constexpr uint32_t kArgsSize = 0x0001'0000;
inline constexpr uint32_t kSpawnArgsBase = 0x8002'0000;
inline constexpr uint32_t kSpawnArgsSize = 0x0001'0000;

// File system replica, its reconciliation base, and two scratch areas the
// parent uses to hold a child's replica and base during reconciliation.
inline constexpr uint32_t kFsBase = 0x9000'0000;
inline constexpr uint32_t kFsBaseCopy = 0xA000'0000;
inline constexpr uint32_t kScratchFs = 0xB000'0000;
inline constexpr uint32_t kScratchBase = 0xC000'0000;
inline constexpr uint32_t kFsMaxSize = 0x1000'0000;  // 256 MiB per region
inline constexpr uint32_t kFsDefaultSize = 0x0040'0000;  // 4 MiB

// Pseudo program counters at or above this value name registered host
// programs: pc = kHostPcBase + program id.
inline constexpr uint32_t kHostPcBase = 0xFFFF'0000;

}  // namespace detspace::layout
