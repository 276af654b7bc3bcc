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
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "detspace/layout.h"

namespace detspace {

// A flat code image. Branches are pc-relative; `LI rd, label` resolves to
// the absolute address of the label for the given load base.
struct AsmProgram {
  uint32_t base = layout::kCodeBase;
  std::vector<uint8_t> code;
  std::map<std::string, uint32_t> symbols;
  uint32_t entry = layout::kCodeBase;

  uint32_t symbol(const std::string& name) const;
};

class AsmError : public std::runtime_error {
 public:
  AsmError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

// Source syntax: one instruction or directive per line, `label:` prefixes,
// `;` or `#` comments. Directives: .word .byte .space .align .ascii .asciz
// .equ. Registers r0..r15 (sp = r14, ra = r15). The entry point is the
// `start` label when present, otherwise the base.
AsmProgram assemble(std::string_view source, uint32_t base = layout::kCodeBase);

// Canonical text, one instruction per line, numeric branch offsets. Words
// that do not decode are emitted as `.word`. assemble(disassemble(c)) == c.
std::string disassemble(std::span<const uint8_t> code);

}  // namespace detspace
