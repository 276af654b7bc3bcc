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

#include "detspace/assembler.h"

#include <cctype>
#include <cstdio>
#include <optional>
#include <sstream>

#include "detspace/isa.h"

namespace detspace {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string upper(std::string s) {
  for (char& c : s) c = char(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
bool is_ident(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Splits on commas that are outside quotes.
std::vector<std::string> split_operands(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (!quoted && c == '\'' && i + 2 < line.size()) {
      // Skip a character literal so ';' or '#' inside it is kept.
      i += (line[i + 1] == '\\') ? 3 : 2;
      continue;
    }
    if (!quoted && (c == ';' || c == '#')) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

struct Value {
  int64_t v = 0;
  bool symbolic = false;  // references a label or constant
};

class Assembler {
 public:
  Assembler(std::string_view src, uint32_t base) : base_(base) {
    std::string cur;
    for (char c : src) {
      if (c == '\n') {
        lines_.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    if (!cur.empty()) lines_.push_back(cur);
  }

  AsmProgram run() {
    pass(false);
    pass(true);
    AsmProgram prog;
    prog.base = base_;
    prog.code = std::move(out_);
    for (auto& [name, val] : symbols_) prog.symbols[name] = uint32_t(val);
    auto it = symbols_.find("start");
    prog.entry = it == symbols_.end() ? base_ : uint32_t(it->second);
    return prog;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw AsmError(line_no_, msg); }

  void pass(bool emit) {
    emit_ = emit;
    pc_ = 0;
    out_.clear();
    for (size_t i = 0; i < lines_.size(); ++i) {
      line_no_ = int(i + 1);
      std::string line = trim(strip_comment(lines_[i]));
      // Labels.
      while (true) {
        size_t j = 0;
        if (line.empty() || !is_ident_start(line[0]) || line[0] == '.') break;
        while (j < line.size() && is_ident(line[j])) ++j;
        if (j < line.size() && line[j] == ':') {
          std::string name = line.substr(0, j);
          if (!emit) {
            if (symbols_.count(name)) fail("duplicate label '" + name + "'");
            symbols_[name] = int64_t(base_) + pc_;
          }
          line = trim(line.substr(j + 1));
        } else {
          break;
        }
      }
      if (line.empty()) continue;
      size_t sp = 0;
      while (sp < line.size() && !std::isspace(static_cast<unsigned char>(line[sp]))) ++sp;
      std::string head = line.substr(0, sp);
      std::string rest = trim(line.substr(sp));
      if (head[0] == '.') {
        directive(head, rest);
      } else {
        instruction(upper(head), rest);
      }
    }
  }

  // --- expressions -------------------------------------------------------

  Value parse_term(std::string_view s, size_t& i) const {
    while (i < s.size() && s[i] == ' ') ++i;
    if (i >= s.size()) fail("missing operand");
    bool neg = false;
    if (s[i] == '-') {
      neg = true;
      ++i;
    }
    Value v;
    if (s[i] == '\'') {
      if (i + 2 >= s.size()) fail("bad character literal");
      char c = s[i + 1];
      size_t close = i + 2;
      if (c == '\\') {
        char e = s[i + 2];
        c = e == 'n' ? '\n' : e == 't' ? '\t' : e == '0' ? '\0' : e;
        close = i + 3;
      }
      if (close >= s.size() || s[close] != '\'') fail("bad character literal");
      v.v = static_cast<unsigned char>(c);
      i = close + 1;
    } else if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      size_t j = i;
      while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
      std::string num(s.substr(i, j - i));
      try {
        size_t used = 0;
        unsigned long long n = std::stoull(num, &used, 0);
        if (used != num.size()) fail("bad number '" + num + "'");
        v.v = int64_t(n);
      } catch (const std::logic_error&) {
        fail("bad number '" + num + "'");
      }
      i = j;
    } else if (is_ident_start(s[i])) {
      size_t j = i;
      while (j < s.size() && is_ident(s[j])) ++j;
      std::string name(s.substr(i, j - i));
      auto it = symbols_.find(name);
      if (it == symbols_.end()) {
        if (emit_) fail("undefined label '" + name + "'");
        v.v = 0;
      } else {
        v.v = it->second;
      }
      v.symbolic = true;
      i = j;
    } else {
      fail("unexpected '" + std::string(1, s[i]) + "'");
    }
    if (neg) v.v = -v.v;
    return v;
  }

  Value parse_expr(std::string_view s) const {
    size_t i = 0;
    Value acc = parse_term(s, i);
    while (true) {
      while (i < s.size() && s[i] == ' ') ++i;
      if (i >= s.size()) break;
      char op = s[i];
      if (op != '+' && op != '-') fail("unexpected '" + std::string(1, op) + "'");
      ++i;
      Value t = parse_term(s, i);
      acc.v = op == '+' ? acc.v + t.v : acc.v - t.v;
      acc.symbolic = acc.symbolic || t.symbolic;
    }
    return acc;
  }

  unsigned parse_reg(const std::string& s) const {
    std::string r = upper(trim(s));
    if (r == "SP") return 14;
    if (r == "RA") return 15;
    if (r.size() >= 2 && r[0] == 'R') {
      try {
        size_t used = 0;
        int n = std::stoi(r.substr(1), &used, 10);
        if (used == r.size() - 1 && n >= 0 && n < kNumRegs) return unsigned(n);
      } catch (const std::logic_error&) {
      }
    }
    fail("bad register '" + s + "'");
  }

  // "imm(reg)" or "(reg)".
  std::pair<int32_t, unsigned> parse_mem(const std::string& s) const {
    size_t open = s.rfind('(');
    size_t close = s.rfind(')');
    if (open == std::string::npos || close != s.size() - 1 || close < open)
      fail("bad memory operand '" + s + "'");
    unsigned reg = parse_reg(s.substr(open + 1, close - open - 1));
    std::string imm = trim(s.substr(0, open));
    int64_t off = imm.empty() ? 0 : parse_expr(imm).v;
    if (off < -32768 || off > 32767) fail("offset out of range");
    return {int32_t(off), reg};
  }

  void expect(const std::vector<std::string>& ops, size_t n,
              const std::string& mnem) const {
    if (ops.size() != n)
      fail(mnem + " expects " + std::to_string(n) + " operand(s)");
  }

  // --- emission ----------------------------------------------------------

  void emit_word(uint32_t w) {
    if (emit_)
      for (int k = 0; k < 4; ++k) out_.push_back(uint8_t(w >> (8 * k)));
    pc_ += 4;
  }
  void emit_byte(uint8_t b) {
    if (emit_) out_.push_back(b);
    pc_ += 1;
  }

  int32_t branch_offset(const std::string& operand, int bits) const {
    Value v = parse_expr(operand);
    int64_t off = v.symbolic ? v.v - (int64_t(base_) + pc_) : v.v;
    if (!emit_) return 0;
    int64_t lim = int64_t(1) << (bits - 1);
    if (off < -lim || off >= lim) fail("branch target out of range");
    return int32_t(off);
  }

  void instruction(const std::string& mnem, const std::string& rest) {
    auto op = opcode_from_mnemonic(mnem);
    if (!op) fail("unknown mnemonic '" + mnem + "'");
    std::vector<std::string> ops = rest.empty() ? std::vector<std::string>{}
                                                : split_operands(rest);
    switch (op_info(*op).format) {
      case Format::kNone:
        expect(ops, 0, mnem);
        emit_word(encode_rrr(*op, 0, 0, 0));
        break;
      case Format::kLi: {
        expect(ops, 2, mnem);
        unsigned rd = parse_reg(ops[0]);
        int64_t v = parse_expr(ops[1]).v;
        if (emit_ && (v < INT32_MIN || v > int64_t(UINT32_MAX)))
          fail("immediate out of range");
        emit_word(encode_rrr(*op, rd, 0, 0));
        emit_word(uint32_t(v));
        break;
      }
      case Format::kRR:
        expect(ops, 2, mnem);
        emit_word(encode_rrr(*op, parse_reg(ops[0]), parse_reg(ops[1]), 0));
        break;
      case Format::kRRR:
        expect(ops, 3, mnem);
        emit_word(encode_rrr(*op, parse_reg(ops[0]), parse_reg(ops[1]),
                             parse_reg(ops[2])));
        break;
      case Format::kMem: {
        expect(ops, 2, mnem);
        unsigned ra = parse_reg(ops[0]);
        auto [off, rb] = parse_mem(ops[1]);
        emit_word(encode_imm16(*op, ra, rb, off));
        break;
      }
      case Format::kBranch: {
        expect(ops, 3, mnem);
        unsigned ra = parse_reg(ops[0]);
        unsigned rb = parse_reg(ops[1]);
        emit_word(encode_imm16(*op, ra, rb, branch_offset(ops[2], 16)));
        break;
      }
      case Format::kJal: {
        expect(ops, 2, mnem);
        unsigned rd = parse_reg(ops[0]);
        emit_word(encode_imm20(*op, rd, branch_offset(ops[1], 20)));
        break;
      }
      case Format::kJr:
        expect(ops, 1, mnem);
        emit_word(encode_rrr(*op, parse_reg(ops[0]), 0, 0));
        break;
    }
  }

  std::string parse_string(const std::string& s) const {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') fail("expected string");
    std::string out;
    for (size_t i = 1; i + 1 < s.size(); ++i) {
      char c = s[i];
      if (c == '\\' && i + 2 < s.size()) {
        char e = s[++i];
        c = e == 'n' ? '\n' : e == 't' ? '\t' : e == '0' ? '\0' : e;
      }
      out += c;
    }
    return out;
  }

  void directive(const std::string& head, const std::string& rest) {
    std::vector<std::string> ops = rest.empty() ? std::vector<std::string>{}
                                                : split_operands(rest);
    if (head == ".word") {
      if (ops.empty()) fail(".word needs values");
      for (auto& o : ops) emit_word(uint32_t(parse_expr(o).v));
    } else if (head == ".byte") {
      if (ops.empty()) fail(".byte needs values");
      for (auto& o : ops) {
        int64_t v = parse_expr(o).v;
        if (emit_ && (v < -128 || v > 255)) fail("byte out of range");
        emit_byte(uint8_t(v));
      }
    } else if (head == ".space") {
      if (ops.size() != 1) fail(".space needs a size");
      int64_t n = parse_expr(ops[0]).v;
      if (n < 0 || n > int64_t(layout::kCodeSize)) fail("bad .space size");
      for (int64_t k = 0; k < n; ++k) emit_byte(0);
    } else if (head == ".align") {
      if (ops.size() != 1) fail(".align needs a value");
      int64_t n = parse_expr(ops[0]).v;
      if (n <= 0 || (n & (n - 1))) fail("alignment must be a power of two");
      while (pc_ % uint32_t(n)) emit_byte(0);
    } else if (head == ".ascii" || head == ".asciz") {
      if (ops.size() != 1) fail(head + " needs one string");
      for (char c : parse_string(ops[0])) emit_byte(uint8_t(c));
      if (head == ".asciz") emit_byte(0);
    } else if (head == ".equ") {
      if (ops.size() != 2) fail(".equ needs a name and a value");
      if (!emit_) {
        if (symbols_.count(ops[0])) fail("duplicate symbol '" + ops[0] + "'");
        symbols_[ops[0]] = parse_expr(ops[1]).v;
      }
    } else {
      fail("unknown directive '" + head + "'");
    }
  }

  uint32_t base_;
  std::vector<std::string> lines_;
  std::map<std::string, int64_t> symbols_;
  std::vector<uint8_t> out_;
  uint32_t pc_ = 0;
  bool emit_ = false;
  int line_no_ = 0;
};

std::string reg_name(unsigned r) { return "r" + std::to_string(r); }

}  // namespace

AsmError::AsmError(int line, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

uint32_t AsmProgram::symbol(const std::string& name) const {
  auto it = symbols.find(name);
  if (it == symbols.end()) throw std::out_of_range("no symbol '" + name + "'");
  return it->second;
}

AsmProgram assemble(std::string_view source, uint32_t base) {
  return Assembler(source, base).run();
}

std::string disassemble(std::span<const uint8_t> code) {
  std::ostringstream os;
  auto word_at = [&](size_t i) {
    return uint32_t(code[i]) | uint32_t(code[i + 1]) << 8 |
           uint32_t(code[i + 2]) << 16 | uint32_t(code[i + 3]) << 24;
  };
  auto hex = [](uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%x", v);
    return std::string(buf);
  };
  size_t i = 0;
  for (; i + 4 <= code.size();) {
    uint32_t w = word_at(i);
    Decoded d = decode(w);
    if (d.op == Opcode::kIllegal || (d.op == Opcode::kLi && i + 8 > code.size())) {
      os << ".word " << hex(w) << "\n";
      i += 4;
      continue;
    }
    const OpInfo& info = op_info(d.op);
    os << info.mnemonic;
    switch (info.format) {
      case Format::kNone: break;
      case Format::kLi:
        os << " " << reg_name(d.a) << ", " << hex(word_at(i + 4));
        break;
      case Format::kRR: os << " " << reg_name(d.a) << ", " << reg_name(d.b); break;
      case Format::kRRR:
        os << " " << reg_name(d.a) << ", " << reg_name(d.b) << ", " << reg_name(d.c);
        break;
      case Format::kMem:
        os << " " << reg_name(d.a) << ", " << d.imm << "(" << reg_name(d.b) << ")";
        break;
      case Format::kBranch:
        os << " " << reg_name(d.a) << ", " << reg_name(d.b) << ", " << d.imm;
        break;
      case Format::kJal: os << " " << reg_name(d.a) << ", " << d.imm; break;
      case Format::kJr: os << " " << reg_name(d.a); break;
    }
    os << "\n";
    i += insn_size(w);
  }
  for (; i < code.size(); ++i) os << ".byte " << unsigned(code[i]) << "\n";
  return os.str();
}

}  // namespace detspace
