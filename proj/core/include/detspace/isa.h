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

// Guest instruction set.
//
// Every instruction is one little-endian 32-bit word except LI, which is
// followed by a second word holding the 32-bit immediate. Field layout:
//
//   [31:24] opcode   [23:20] a   [19:16] b   [15:12] c
//   [15:0]  imm16 (signed; loads, stores, branches)
//   [19:0]  imm20 (signed; JAL)
//
// Branch and JAL offsets are byte offsets relative to the address of the
// branch itself. LD/ST move 32-bit little-endian words, LDB/STB bytes.
// r0 always reads as zero. DIVU by zero traps; there is no signed division.
//
// System call convention (SYS):
//   r1 call (0 put, 1 get, 2 ret, 3 dev_write, 4 dev_read)
//   r2 child number (ret: exit code; dev_*: device id)
//   r3 option bits        r4 source address   r5 destination address
//   r6 length             r7 permission       r8 instruction limit (0 = none)
//   r9 address of a 17-word register block (r0..r15, pc) for the Regs option
// On return r1 holds 0 or a negated ApiError. Get additionally returns the
// stop reason in r2, the exit code in r3, the trap kind in r4, the conflict
// count in r5 and the first conflicting address in r6. dev_read returns the
// byte count in r2, or 0xffffffff when the device has no more records.
// HALT stops the space like `ret` with the exit code taken from r2.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace detspace {

inline constexpr int kNumRegs = 16;

struct RegisterFile {
  std::array<uint32_t, kNumRegs> r{};
  uint32_t pc = 0;

  uint32_t get(unsigned i) const { return i == 0 ? 0 : r[i]; }
  void set(unsigned i, uint32_t v) {
    if (i != 0) r[i] = v;
  }
  friend bool operator==(const RegisterFile&, const RegisterFile&) = default;
};

// Size of the in-memory register block used by Regs on VM syscalls.
inline constexpr uint32_t kRegBlockBytes = 4 * (kNumRegs + 1);

enum class Opcode : uint8_t {
  kIllegal = 0,
  kLi,
  kMov,
  kAdd,
  kSub,
  kMul,
  kDivu,
  kAnd,
  kOr,
  kXor,
  kShl,
  kShr,
  kLd,
  kSt,
  kLdb,
  kStb,
  kBeq,
  kBne,
  kBltu,
  kJal,
  kJr,
  kSys,
  kHalt,
};
inline constexpr int kNumOpcodes = int(Opcode::kHalt) + 1;

enum class Format { kNone, kLi, kRR, kRRR, kMem, kBranch, kJal, kJr };

struct OpInfo {
  Opcode op;
  std::string_view mnemonic;
  Format format;
};

const OpInfo& op_info(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view m);
bool is_valid_opcode(uint8_t byte);

struct Decoded {
  Opcode op = Opcode::kIllegal;
  uint8_t a = 0, b = 0, c = 0;
  int32_t imm = 0;  // imm16 or imm20, sign-extended
};

Decoded decode(uint32_t word);

constexpr uint32_t encode_rrr(Opcode op, unsigned a, unsigned b, unsigned c) {
  return uint32_t(op) << 24 | (a & 15) << 20 | (b & 15) << 16 | (c & 15) << 12;
}
constexpr uint32_t encode_imm16(Opcode op, unsigned a, unsigned b, int32_t imm) {
  return uint32_t(op) << 24 | (a & 15) << 20 | (b & 15) << 16 |
         (uint32_t(imm) & 0xffff);
}
constexpr uint32_t encode_imm20(Opcode op, unsigned a, int32_t imm) {
  return uint32_t(op) << 24 | (a & 15) << 20 | (uint32_t(imm) & 0xfffff);
}

// Width in bytes of the instruction starting with `word`.
constexpr uint32_t insn_size(uint32_t word) {
  return (word >> 24) == uint32_t(Opcode::kLi) ? 8 : 4;
}

}  // namespace detspace
