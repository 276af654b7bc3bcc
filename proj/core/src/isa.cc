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

#include "detspace/isa.h"

namespace detspace {

namespace {

constexpr std::array<OpInfo, kNumOpcodes> kOps = {{
    {Opcode::kIllegal, "ILLEGAL", Format::kNone},
    {Opcode::kLi, "LI", Format::kLi},
    {Opcode::kMov, "MOV", Format::kRR},
    {Opcode::kAdd, "ADD", Format::kRRR},
    {Opcode::kSub, "SUB", Format::kRRR},
    {Opcode::kMul, "MUL", Format::kRRR},
    {Opcode::kDivu, "DIVU", Format::kRRR},
    {Opcode::kAnd, "AND", Format::kRRR},
    {Opcode::kOr, "OR", Format::kRRR},
    {Opcode::kXor, "XOR", Format::kRRR},
    {Opcode::kShl, "SHL", Format::kRRR},
    {Opcode::kShr, "SHR", Format::kRRR},
    {Opcode::kLd, "LD", Format::kMem},
    {Opcode::kSt, "ST", Format::kMem},
    {Opcode::kLdb, "LDB", Format::kMem},
    {Opcode::kStb, "STB", Format::kMem},
    {Opcode::kBeq, "BEQ", Format::kBranch},
    {Opcode::kBne, "BNE", Format::kBranch},
    {Opcode::kBltu, "BLTU", Format::kBranch},
    {Opcode::kJal, "JAL", Format::kJal},
    {Opcode::kJr, "JR", Format::kJr},
    {Opcode::kSys, "SYS", Format::kNone},
    {Opcode::kHalt, "HALT", Format::kNone},
}};

}  // namespace

const OpInfo& op_info(Opcode op) { return kOps[size_t(op)]; }

std::optional<Opcode> opcode_from_mnemonic(std::string_view m) {
  for (size_t i = 1; i < kOps.size(); ++i)
    if (kOps[i].mnemonic == m) return kOps[i].op;
  return std::nullopt;
}

bool is_valid_opcode(uint8_t byte) { return byte >= 1 && byte < kNumOpcodes; }

Decoded decode(uint32_t word) {
  Decoded d;
  uint8_t opb = uint8_t(word >> 24);
  if (!is_valid_opcode(opb)) return d;
  Opcode op = Opcode(opb);
  uint32_t unused = 0;
  switch (op_info(op).format) {
    case Format::kNone: unused = 0xffffff; break;
    case Format::kLi:
    case Format::kJr: unused = 0xfffff; break;
    case Format::kRR: unused = 0xffff; break;
    case Format::kRRR: unused = 0xfff; break;
    default: break;
  }
  if (word & unused) return d;  // non-canonical encodings are illegal
  d.op = op;
  d.a = (word >> 20) & 15;
  d.b = (word >> 16) & 15;
  d.c = (word >> 12) & 15;
  if (op_info(d.op).format == Format::kJal) {
    d.imm = int32_t(word << 12) >> 12;
  } else {
    d.imm = int16_t(word & 0xffff);
  }
  return d;
}

}  // namespace detspace
