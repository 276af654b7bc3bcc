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

#include "detspace/vm.h"

#include <array>
#include <cstring>

namespace detspace {

const char* to_string(TrapKind k) {
  switch (k) {
    case TrapKind::kNone: return "none";
    case TrapKind::kDivideByZero: return "divide_by_zero";
    case TrapKind::kAccessFault: return "access_fault";
    case TrapKind::kIllegalInstruction: return "illegal_instruction";
  }
  return "?";
}

namespace {

constexpr uint32_t kNoPage = 0xffffffffu;
constexpr size_t kTlbSize = 64;

// Translation cache local to one run_until call. Nothing but this call
// mutates the image while it runs, so cached entries and writable page
// pointers stay valid until a slow-path access goes around them.
struct TlbEntry {
  uint32_t page = kNoPage;
  PageEntry* e = nullptr;
  uint8_t* w = nullptr;
  uint32_t seen = 0;
  bool seen_valid = false;
};

class Interp {
 public:
  Interp(RegisterFile& regs, MemoryImage& mem)
      : r_(regs), mem_(mem), observe_(mem.observer() != nullptr) {}

  VmResult run(uint64_t budget) {
    VmResult res;
    while (res.steps < budget) {
      ++res.steps;
      if (!exec_one(res)) return res;
    }
    res.stop = VmStop::kBudget;
    return res;
  }

 private:
  TlbEntry* entry(uint32_t page) {
    TlbEntry& t = tlb_[page & (kTlbSize - 1)];
    if (t.page != page) {
      PageEntry* e = mem_.lookup(page);
      if (!e) return nullptr;
      t = TlbEntry{page, e, nullptr, 0, false};
    }
    return &t;
  }

  void flush() { tlb_.fill(TlbEntry{}); }

  void seen_read(TlbEntry& t) {
    if (!observe_) return;
    if (t.seen_valid && t.seen == t.e->version) return;
    mem_.note_read(t.page, *t.e);
    t.seen = t.e->version;
    t.seen_valid = true;
  }

  // Returns false and fills `res` on fault.
  bool load(uint32_t addr, uint8_t* out, uint32_t n, VmResult& res) {
    uint32_t off = addr & (kPageSize - 1);
    if (off + n <= kPageSize) {
      TlbEntry* t = entry(addr >> kPageShift);
      if (!t || t->e->perm == Perm::kNone) return fault(addr, res);
      std::memcpy(out, t->e->data->data() + off, n);
      seen_read(*t);
      return true;
    }
    uint32_t where = 0;
    if (!mem_.guest_read(addr, std::span<uint8_t>(out, n), &where))
      return fault(where, res);
    return true;
  }

  bool store(uint32_t addr, const uint8_t* in, uint32_t n, VmResult& res) {
    uint32_t off = addr & (kPageSize - 1);
    if (off + n <= kPageSize) {
      TlbEntry* t = entry(addr >> kPageShift);
      if (!t || t->e->perm != Perm::kReadWrite) return fault(addr, res);
      if (!t->w) t->w = mem_.writable_bytes(*t->e);
      std::memcpy(t->w + off, in, n);
      mem_.note_write(t->page, *t->e);
      t->seen = t->e->version;
      t->seen_valid = true;
      return true;
    }
    uint32_t where = 0;
    bool ok = mem_.guest_write(addr, std::span<const uint8_t>(in, n), &where);
    flush();
    if (!ok) return fault(where, res);
    return true;
  }

  bool fetch(uint32_t addr, uint32_t& word, VmResult& res) {
    if (addr & 3) return fault(addr, res);
    uint8_t b[4];
    if (!load(addr, b, 4, res)) return false;
    word = uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
           uint32_t(b[3]) << 24;
    return true;
  }

  bool fault(uint32_t addr, VmResult& res) {
    res.stop = VmStop::kTrap;
    res.trap = TrapKind::kAccessFault;
    res.fault_addr = addr;
    return false;
  }

  bool trap(TrapKind k, VmResult& res) {
    res.stop = VmStop::kTrap;
    res.trap = k;
    res.fault_addr = r_.pc;
    return false;
  }

  bool exec_one(VmResult& res) {
    uint32_t pc = r_.pc;
    uint32_t w;
    if (!fetch(pc, w, res)) return false;
    Decoded d = decode(w);
    auto A = [&] { return r_.get(d.a); };
    auto B = [&] { return r_.get(d.b); };
    auto C = [&] { return r_.get(d.c); };
    uint32_t next = pc + 4;
    switch (d.op) {
      case Opcode::kIllegal: return trap(TrapKind::kIllegalInstruction, res);
      case Opcode::kLi: {
        uint32_t imm;
        if (!fetch(pc + 4, imm, res)) return false;
        r_.set(d.a, imm);
        next = pc + 8;
        break;
      }
      case Opcode::kMov: r_.set(d.a, B()); break;
      case Opcode::kAdd: r_.set(d.a, B() + C()); break;
      case Opcode::kSub: r_.set(d.a, B() - C()); break;
      case Opcode::kMul: r_.set(d.a, B() * C()); break;
      case Opcode::kDivu:
        if (C() == 0) return trap(TrapKind::kDivideByZero, res);
        r_.set(d.a, B() / C());
        break;
      case Opcode::kAnd: r_.set(d.a, B() & C()); break;
      case Opcode::kOr: r_.set(d.a, B() | C()); break;
      case Opcode::kXor: r_.set(d.a, B() ^ C()); break;
      case Opcode::kShl: r_.set(d.a, B() << (C() & 31)); break;
      case Opcode::kShr: r_.set(d.a, B() >> (C() & 31)); break;
      case Opcode::kLd: {
        uint8_t b[4];
        if (!load(B() + uint32_t(d.imm), b, 4, res)) return false;
        r_.set(d.a, uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
                        uint32_t(b[3]) << 24);
        break;
      }
      case Opcode::kSt: {
        uint32_t v = A();
        uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                        uint8_t(v >> 24)};
        if (!store(B() + uint32_t(d.imm), b, 4, res)) return false;
        break;
      }
      case Opcode::kLdb: {
        uint8_t b;
        if (!load(B() + uint32_t(d.imm), &b, 1, res)) return false;
        r_.set(d.a, b);
        break;
      }
      case Opcode::kStb: {
        uint8_t b = uint8_t(A());
        if (!store(B() + uint32_t(d.imm), &b, 1, res)) return false;
        break;
      }
      case Opcode::kBeq:
        if (A() == B()) next = pc + uint32_t(d.imm);
        break;
      case Opcode::kBne:
        if (A() != B()) next = pc + uint32_t(d.imm);
        break;
      case Opcode::kBltu:
        if (A() < B()) next = pc + uint32_t(d.imm);
        break;
      case Opcode::kJal:
        r_.set(d.a, pc + 4);
        next = pc + uint32_t(d.imm);
        break;
      case Opcode::kJr: next = A(); break;
      case Opcode::kSys:
        r_.pc = next;
        res.stop = VmStop::kSyscall;
        return false;
      case Opcode::kHalt:
        r_.pc = next;
        res.stop = VmStop::kHalt;
        return false;
    }
    r_.pc = next;
    return true;
  }

  RegisterFile& r_;
  MemoryImage& mem_;
  bool observe_;
  std::array<TlbEntry, kTlbSize> tlb_{};
};

}  // namespace

VmResult run_until(RegisterFile& regs, MemoryImage& mem, uint64_t budget) {
  if (budget == 0) return VmResult{};
  return Interp(regs, mem).run(budget);
}

}  // namespace detspace
