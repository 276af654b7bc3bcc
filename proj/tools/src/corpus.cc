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

#include "detspace/tools/corpus.h"

#include <algorithm>
#include <atomic>
#include <deque>
#include <stdexcept>
#include <utility>

#include "detspace/dsched.h"
#include "detspace/guest.h"
#include "detspace/kernel.h"
#include "detspace/proc.h"
#include "detspace/threads.h"

namespace detspace::tools {

namespace {

using layout::kHeapBase;
using layout::kSharedBase;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

uint32_t arg_u32(const Process& p, size_t i, uint32_t lo, uint32_t hi) {
  const auto& a = p.args();
  if (i >= a.size()) throw UsageError("missing argument " + std::to_string(i));
  size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(a[i], &used, 10);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != a[i].size() || v < lo || v > hi)
    throw UsageError("argument '" + a[i] + "' must be in " + std::to_string(lo) + ".." +
                     std::to_string(hi));
  return uint32_t(v);
}

Md5Digest parse_digest(const std::string& hex) {
  Md5Digest d{};
  if (hex.size() != 32) throw UsageError("digest must be 32 hex digits");
  for (size_t i = 0; i < 16; ++i) {
    size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(hex.substr(2 * i, 2), &used, 16);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != 2) throw UsageError("digest must be 32 hex digits");
    d[i] = uint8_t(v);
  }
  return d;
}

// Wraps a process main so bad arguments print a usage line (exit 2) and
// write/write races print the conflict (exit 3).
ProcMain guarded(std::string usage, ProcMain main) {
  return [usage = std::move(usage), main = std::move(main)](Process& p) -> Task<uint32_t> {
    std::string failure;
    uint32_t code = 0;
    try {
      code = co_await main(p);
    } catch (const UsageError& e) {
      failure = std::string(e.what()) + "\nusage: " + usage + "\n";
      code = 2;
    } catch (const ConflictError& e) {
      failure = std::string(e.what()) + "\n";
      code = 3;
    }
    if (!failure.empty()) p.print(failure);
    co_return code;
  };
}

// ---- md5 search ---------------------------------------------------------

// Shared layout of md5search: target, parameters, the per-fork argument
// buffer and one result slot per thread.
constexpr uint32_t kMd5Target = kSharedBase;
constexpr uint32_t kMd5MaxLen = kSharedBase + 0x10;
constexpr uint32_t kMd5Threads = kSharedBase + 0x14;
constexpr uint32_t kMd5Buf = kSharedBase + 0x20;
constexpr uint32_t kMd5Results = kSharedBase + 0x100;
constexpr uint32_t kMd5Slot = 16;
constexpr uint32_t kMaxMd5Len = 6;
constexpr uint32_t kMaxThreads = 64;

// First match, in search order, among strings whose first letter index
// lies in `firsts`.
std::optional<std::string> search_firsts(const Md5Digest& target, uint32_t maxlen,
                                         const std::vector<uint32_t>& firsts) {
  const uint32_t base = uint32_t(kMd5Alphabet.size());
  for (uint32_t len = 1; len <= maxlen; ++len) {
    for (uint32_t f : firsts) {
      std::string s(len, kMd5Alphabet[0]);
      s[0] = kMd5Alphabet[f];
      std::vector<uint32_t> digit(len, 0);
      for (;;) {
        if (md5(s) == target) return s;
        size_t j = len;
        while (j > 1 && digit[j - 1] == base - 1) {
          digit[j - 1] = 0;
          s[j - 1] = kMd5Alphabet[0];
          --j;
        }
        if (j == 1) break;
        ++digit[j - 1];
        s[j - 1] = kMd5Alphabet[digit[j - 1]];
      }
    }
  }
  return std::nullopt;
}

bool better(const std::string& a, const std::optional<std::string>& b) {
  return !b || a.size() < b->size() || (a.size() == b->size() && a < *b);
}

Task<uint32_t> md5search_worker(Guest& g) {
  Md5Digest target;
  g.read(kMd5Target, target);
  uint32_t maxlen = g.load32(kMd5MaxLen), nthreads = g.load32(kMd5Threads);
  // The buffer as it was when this thread was forked.
  uint32_t tid = g.load32(kMd5Buf);
  std::vector<uint32_t> firsts;
  for (uint32_t f = tid; f < kMd5Alphabet.size(); f += nthreads) firsts.push_back(f);
  std::optional<std::string> hit = search_firsts(target, maxlen, firsts);
  if (hit) {
    uint32_t slot = kMd5Results + tid * kMd5Slot;
    g.store8(slot, uint8_t(hit->size()));
    g.write_string(slot + 1, *hit);
  }
  co_return 0;
}

Task<uint32_t> md5search_main(Process& p) {
  Guest& g = p.guest();
  if (p.args().size() != 4) throw UsageError("expected 3 arguments");
  Md5Digest target = parse_digest(p.args()[1]);
  uint32_t maxlen = arg_u32(p, 2, 1, kMaxMd5Len);
  uint32_t nthreads = arg_u32(p, 3, 1, kMaxThreads);

  ThreadOptions opts;
  opts.shared_size = 0x10000;
  opts.spread_nodes = true;
  ThreadGroup group(p, opts);
  g.write(kMd5Target, target);
  g.store32(kMd5MaxLen, maxlen);
  g.store32(kMd5Threads, nthreads);
  for (uint32_t tid = 0; tid < nthreads; ++tid) {
    g.store32(kMd5Buf, tid);
    co_await group.fork(tid, "md5search.worker");
  }
  std::optional<std::string> best;
  for (uint32_t tid = 0; tid < nthreads; ++tid) {
    ThreadStop s = co_await group.join(tid);
    ThreadGroup::check(tid, s);
    uint32_t slot = kMd5Results + tid * kMd5Slot;
    uint32_t len = g.load8(slot);
    if (len) {
      std::string hit = g.read_string(slot + 1, len);
      if (better(hit, best)) best = hit;
    }
  }
  if (!best) {
    p.print("not found\n");
    co_return 1;
  }
  p.fs().write(kMd5Out, *best, p.id());
  p.print("found " + *best + "\n");
  co_return 0;
}

// Recursive fork tree; the right half of each split goes to relative node
// 2^(depth-1), so a depth-k tree covers 2^k nodes.
Task<uint32_t> md5tree_main(Process& p) {
  const auto& a = p.args();
  if (a.size() != 4 && a.size() != 6) throw UsageError("expected 3 arguments");
  Md5Digest target = parse_digest(a[1]);
  uint32_t maxlen = arg_u32(p, 2, 1, kMaxMd5Len);
  uint32_t depth = arg_u32(p, 3, 0, 5);
  bool top = a.size() == 4;
  const uint32_t letters = uint32_t(kMd5Alphabet.size());
  uint32_t lo = top ? 0 : arg_u32(p, 4, 0, letters);
  uint32_t hi = top ? letters : arg_u32(p, 5, lo, letters);

  if (depth == 0 || hi - lo <= 1) {
    std::vector<uint32_t> firsts;
    for (uint32_t f = lo; f < hi; ++f) firsts.push_back(f);
    std::optional<std::string> hit = search_firsts(target, maxlen, firsts);
    if (hit) p.fs().write("/md5tree/found-" + std::to_string(lo), *hit, p.id());
  } else {
    uint32_t mid = (lo + hi) / 2;
    uint32_t far = (1u << (depth - 1)) % p.nodes();
    std::vector<std::string> left{a[1], a[2], std::to_string(depth - 1), std::to_string(lo),
                                  std::to_string(mid)};
    std::vector<std::string> right{a[1], a[2], std::to_string(depth - 1),
                                   std::to_string(mid), std::to_string(hi)};
    uint32_t lpid = co_await p.fork("md5tree", left, 0);
    uint32_t rpid = co_await p.fork("md5tree", right, far);
    co_await p.waitpid(lpid);
    co_await p.waitpid(rpid);
  }
  if (!top) co_return 0;
  std::optional<std::string> best;
  for (const std::string& path : p.fs().list("/md5tree/")) {
    std::string hit;
    if (p.fs().read(path, hit) == FsError::kOk && better(hit, best)) best = hit;
  }
  if (!best) {
    p.print("not found\n");
    co_return 1;
  }
  p.fs().write(kMd5Out, *best, p.id());
  p.print("found " + *best + "\n");
  co_return 0;
}

// ---- matmult ------------------------------------------------------------

constexpr uint32_t kMatA = kSharedBase;
constexpr uint32_t kMatB = kSharedBase + 0x40000;
constexpr uint32_t kMatC = kSharedBase + 0x80000;
constexpr uint32_t kMatMax = 256;

void store_words(Guest& g, uint32_t addr, const std::vector<uint32_t>& v) {
  std::vector<uint8_t> bytes(v.size() * 4);
  for (size_t i = 0; i < v.size(); ++i)
    for (int k = 0; k < 4; ++k) bytes[4 * i + k] = uint8_t(v[i] >> (8 * k));
  g.write(addr, bytes);
}

std::vector<uint32_t> load_words(const Guest& g, uint32_t addr, size_t n) {
  std::vector<uint8_t> bytes(n * 4);
  g.read(addr, bytes);
  std::vector<uint32_t> v(n);
  for (size_t i = 0; i < n; ++i)
    v[i] = uint32_t(bytes[4 * i]) | uint32_t(bytes[4 * i + 1]) << 8 |
           uint32_t(bytes[4 * i + 2]) << 16 | uint32_t(bytes[4 * i + 3]) << 24;
  return v;
}

std::string words_bytes(const std::vector<uint32_t>& v) {
  std::string s(v.size() * 4, '\0');
  for (size_t i = 0; i < v.size(); ++i)
    for (int k = 0; k < 4; ++k) s[4 * i + k] = char(uint8_t(v[i] >> (8 * k)));
  return s;
}

Task<uint32_t> matmult_main(Process& p) {
  Guest& g = p.guest();
  if (p.args().size() != 4) throw UsageError("expected 3 arguments");
  uint32_t n = arg_u32(p, 1, 1, kMatMax);
  uint32_t nthreads = arg_u32(p, 2, 1, std::min(n, kMaxThreads));
  uint32_t seed = arg_u32(p, 3, 0, 0xffffffff);

  ThreadOptions opts;
  opts.shared_size = 0x100000;
  opts.spread_nodes = true;
  ThreadGroup group(p, opts);
  store_words(g, kMatA, lcg_values(seed, size_t(n) * n));
  store_words(g, kMatB, lcg_values(seed + 1, size_t(n) * n));
  for (uint32_t tid = 0; tid < nthreads; ++tid) {
    RegisterFile r;
    r.set(1, n * tid / nthreads);
    r.set(2, n * (tid + 1) / nthreads);
    r.set(3, n);
    r.set(4, kMatA);
    r.set(5, kMatB);
    r.set(6, kMatC);
    co_await group.fork(tid, "matmult.worker", r);
  }
  for (uint32_t tid = 0; tid < nthreads; ++tid) {
    ThreadStop s = co_await group.join(tid);
    ThreadGroup::check(tid, s);
    if (!s.exited() || s.status.code != 0) {
      p.print("matmult: worker " + std::to_string(tid) + " failed\n");
      co_return 1;
    }
  }
  std::string c = words_bytes(load_words(g, kMatC, size_t(n) * n));
  p.fs().write(kMatmultOut, c, p.id());
  p.print("matmult n=" + std::to_string(n) + " sha256=" + sha256_hex(c) + "\n");
  co_return 0;
}

// ---- qsort --------------------------------------------------------------

constexpr uint32_t kSortData = kSharedBase;
constexpr uint32_t kSortMax = 0x40000;  // elements in the 1 MiB region

// Three-way partition of v[lo, hi) around a median-of-three pivot:
// afterwards [lo, lt) < pivot, [lt, gt) == pivot, [gt, hi) > pivot.
std::pair<size_t, size_t> partition3(std::vector<uint32_t>& v, size_t lo, size_t hi) {
  uint32_t a = v[lo], b = v[lo + (hi - lo) / 2], c = v[hi - 1];
  uint32_t pivot = std::max(std::min(a, b), std::min(std::max(a, b), c));
  size_t lt = lo, i = lo, gt = hi;
  while (i < gt) {
    if (v[i] < pivot) {
      std::swap(v[lt++], v[i++]);
    } else if (v[i] > pivot) {
      std::swap(v[i], v[--gt]);
    } else {
      ++i;
    }
  }
  return {lt, gt};
}

void quicksort(std::vector<uint32_t>& v, size_t lo, size_t hi) {
  while (hi - lo > 16) {
    auto [lt, gt] = partition3(v, lo, hi);
    // Recurse into the smaller side to bound the depth.
    if (lt - lo < hi - gt) {
      quicksort(v, lo, lt);
      lo = gt;
    } else {
      quicksort(v, gt, hi);
      hi = lt;
    }
  }
  for (size_t i = lo + 1; i < hi; ++i)
    for (size_t j = i; j > lo && v[j - 1] > v[j]; --j) std::swap(v[j - 1], v[j]);
}

Task<uint32_t> qsort_worker(Guest& g) {
  uint32_t lo = g.regs().get(1), hi = g.regs().get(2);
  std::vector<uint32_t> v = load_words(g, kSortData + 4 * lo, hi - lo);
  quicksort(v, 0, v.size());
  store_words(g, kSortData + 4 * lo, v);
  co_return 0;
}

Task<uint32_t> qsort_main(Process& p) {
  Guest& g = p.guest();
  if (p.args().size() != 5) throw UsageError("expected 4 arguments");
  uint32_t n = arg_u32(p, 1, 1, kSortMax);
  uint32_t nthreads = arg_u32(p, 2, 1, kMaxThreads);
  uint32_t seed = arg_u32(p, 3, 0, 0xffffffff);
  std::vector<uint32_t> v;
  try {
    v = qsort_input(p.args()[4], n, seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  // Split the largest unsorted segment until there is one per thread.
  std::vector<std::pair<size_t, size_t>> segs;
  segs.emplace_back(0, v.size());
  while (segs.size() < nthreads) {
    auto big = std::max_element(segs.begin(), segs.end(), [](auto& x, auto& y) {
      return x.second - x.first < y.second - y.first;
    });
    if (big->second - big->first < 2) break;
    auto [lo, hi] = *big;
    auto [lt, gt] = partition3(v, lo, hi);
    segs.erase(big);
    if (lt > lo) segs.emplace_back(lo, lt);
    if (hi > gt) segs.emplace_back(gt, hi);
    if (segs.empty()) break;
  }
  std::sort(segs.begin(), segs.end());

  ThreadOptions opts;
  opts.shared_size = 0x100000;
  opts.spread_nodes = true;
  ThreadGroup group(p, opts);
  store_words(g, kSortData, v);
  for (uint32_t tid = 0; tid < segs.size(); ++tid) {
    RegisterFile r;
    r.set(1, uint32_t(segs[tid].first));
    r.set(2, uint32_t(segs[tid].second));
    co_await group.fork(tid, "qsort.worker", r);
  }
  for (uint32_t tid = 0; tid < segs.size(); ++tid) {
    ThreadStop s = co_await group.join(tid);
    ThreadGroup::check(tid, s);
  }
  std::vector<uint32_t> out = load_words(g, kSortData, n);
  bool sorted = std::is_sorted(out.begin(), out.end());
  std::string bytes = words_bytes(out);
  p.fs().write(kQsortOut, bytes, p.id());
  p.print(std::string("qsort n=") + std::to_string(n) + (sorted ? " sorted" : " UNSORTED") +
          " sha256=" + sha256_hex(bytes) + "\n");
  co_return sorted ? 0 : 1;
}

// ---- pmake --------------------------------------------------------------

Task<uint32_t> pmake_task(Process& p) {
  if (p.args().size() != 3) throw UsageError("expected 2 arguments");
  const std::string& name = p.args()[1];
  uint32_t cost = arg_u32(p, 2, 0, 100'000'000);
  uint32_t x = 1;
  for (uint32_t i = 0; i < cost; ++i) x = x * 1103515245u + 12345u;
  p.fs().write("/pmake/" + name + ".out", std::to_string(x) + "\n", p.id());
  co_return 0;
}

// Starts tasks in order, never more than WORKERS at once. A full quota is
// drained with wait(), which returns the earliest-forked task whether or
// not a later one finished first.
Task<uint32_t> pmake_main(Process& p) {
  const auto& a = p.args();
  if (a.size() < 2) throw UsageError("expected a worker count");
  uint32_t workers = arg_u32(p, 1, 1, rt::kForkChildren);
  std::vector<std::pair<std::string, std::string>> tasks;
  for (size_t i = 2; i < a.size(); ++i) {
    size_t colon = a[i].find(':');
    if (colon == std::string::npos || colon == 0) throw UsageError("task must be NAME:COST");
    tasks.emplace_back(a[i].substr(0, colon), a[i].substr(colon + 1));
  }
  if (tasks.empty()) {
    // One long task followed by two short ones.
    tasks.emplace_back("1", "3000000");
    tasks.emplace_back("2", "100000");
    tasks.emplace_back("3", "100000");
  }

  std::string trace;
  auto event = [&](const std::string& line) {
    trace += line + "\n";
    p.print("pmake: " + line + "\n");
  };
  std::deque<std::pair<uint32_t, std::string>> running;
  uint32_t failed = 0;
  auto reap = [&](const WaitStatus& st) {
    std::string name = "?";
    for (auto it = running.begin(); it != running.end(); ++it)
      if (it->first == st.pid) {
        name = it->second;
        running.erase(it);
        break;
      }
    if (!st.exited() || st.code) ++failed;
    event("wait " + name + " " + st.to_string());
  };
  for (auto& [name, cost] : tasks) {
    if (running.size() == workers) {
      std::optional<WaitStatus> st = co_await p.wait();
      reap(*st);
    }
    std::vector<std::string> argv{name, cost};
    uint32_t pid = co_await p.fork("pmake.task", argv);
    running.emplace_back(pid, name);
    event("start " + name);
  }
  for (;;) {
    std::optional<WaitStatus> st = co_await p.wait();
    if (!st) break;
    reap(*st);
  }
  p.fs().write(kPmakeTrace, trace, p.id());
  co_return failed ? 1 : 0;
}

// ---- writers ------------------------------------------------------------

Task<uint32_t> writers_child(Process& p) {
  uint32_t w = arg_u32(p, 1, 0, 1000), lines = arg_u32(p, 2, 0, 100000);
  uint32_t seed = arg_u32(p, 3, 0, 0xffffffff);
  for (uint32_t j = 0; j < lines; ++j) {
    p.print("w" + std::to_string(w) + " " + std::to_string(j) + "\n");
    if (writer_syncs_after(seed, w, j)) co_await p.fsync();
  }
  co_return 0;
}

Task<uint32_t> writers_main(Process& p) {
  if (p.args().size() != 4) throw UsageError("expected 3 arguments");
  uint32_t procs = arg_u32(p, 1, 1, 64), lines = arg_u32(p, 2, 0, 100000);
  uint32_t seed = arg_u32(p, 3, 0, 0xffffffff);
  std::vector<uint32_t> pids;
  for (uint32_t w = 0; w < procs; ++w) {
    std::vector<std::string> argv{std::to_string(w), std::to_string(lines),
                                  std::to_string(seed)};
    uint32_t pid = co_await p.fork("writers.child", argv);
    pids.push_back(pid);
  }
  uint32_t failed = 0;
  for (uint32_t pid : pids) {
    WaitStatus st = co_await p.waitpid(pid);
    if (!st.exited() || st.code) ++failed;
  }
  co_return failed ? 1 : 0;
}

// ---- revisit ------------------------------------------------------------

constexpr uint32_t kRevisitData = kHeapBase;

Task<uint32_t> revisit_leaf(Guest& g) {
  for (;;) {
    uint32_t pages = g.regs().get(1), sum = 0;
    for (uint32_t i = 0; i < pages; ++i) sum += g.load32(kRevisitData + i * kPageSize);
    co_await g.ret(sum);
  }
}

// Alternates between a child on another node and one at home, copying the
// same unchanged pages to the remote child every round.
Task<uint32_t> revisit_main(Process& p) {
  Guest& g = p.guest();
  if (p.args().size() != 3) throw UsageError("expected 2 arguments");
  uint32_t rounds = arg_u32(p, 1, 1, 1000), pages = arg_u32(p, 2, 1, 256);
  for (uint32_t i = 0; i < pages; ++i) g.store32(kRevisitData + i * kPageSize, i + 1);
  uint32_t far = p.nodes() > 1 ? 1 : 0;
  uint32_t remote = child_number(far, p.allocate_child());
  uint32_t local = child_number(0, p.allocate_child());
  uint32_t leaf = g.programs().find("revisit.leaf")->entry_pc();
  uint64_t total = 0;
  for (uint32_t r = 0; r < rounds; ++r) {
    for (uint32_t side = 0; side < 2; ++side) {
      uint32_t child = side ? local : remote;
      SysArgs a;
      a.child = child;
      a.options = opt::kCopy | opt::kRegs | opt::kStart;
      a.src = a.dst = kRevisitData;
      a.len = uint64_t(pages) * kPageSize;
      a.regs.pc = leaf;
      a.regs.set(1, pages);
      SysResult put = co_await g.put(a);
      if (!put.ok()) throw ProcError(std::string("revisit: ") + to_string(put.err));
      SysArgs w;
      w.child = child;
      SysResult got = co_await g.get(w);
      total += got.status.code;
    }
  }
  p.print("revisit rounds=" + std::to_string(rounds) + " sum=" + std::to_string(total) + "\n");
  co_return 0;
}

// ---- small programs -----------------------------------------------------

constexpr std::string_view kSwapWorker = R"(
start:
  LD r3, 0(r1)
  ST r3, 0(r2)
  LI r1, 2
  LI r2, 0
  SYS
)";

Task<uint32_t> swap_main(Process& p) {
  Guest& g = p.guest();
  constexpr uint32_t kX = kSharedBase, kY = kSharedBase + 4;
  ThreadOptions opts;
  opts.shared_size = kPageSize;
  ThreadGroup group(p, opts);
  g.store32(kX, 1);
  g.store32(kY, 2);
  RegisterFile xy, yx;
  xy.set(1, kY);
  xy.set(2, kX);
  yx.set(1, kX);
  yx.set(2, kY);
  co_await group.fork(0, "swap.worker", xy);
  co_await group.fork(1, "swap.worker", yx);
  for (uint32_t tid = 0; tid < 2; ++tid) {
    ThreadStop s = co_await group.join(tid);
    ThreadGroup::check(tid, s);
  }
  p.print("x=" + std::to_string(g.load32(kX)) + " y=" + std::to_string(g.load32(kY)) + "\n");
  co_return 0;
}

Task<uint32_t> hello_main(Process& p) {
  p.print("hello, world\n");
  co_return 0;
}

Task<uint32_t> echo_main(Process& p) {
  std::string line;
  for (size_t i = 1; i < p.args().size(); ++i) line += (i > 1 ? " " : "") + p.args()[i];
  p.print(line + "\n");
  co_return 0;
}

Task<uint32_t> cat_main(Process& p) {
  if (p.args().size() > 1) {
    uint32_t missing = 0;
    for (size_t i = 1; i < p.args().size(); ++i) {
      std::string content;
      if (p.fs().read(p.args()[i], content) != FsError::kOk) {
        p.print("cat: " + p.args()[i] + ": no such file\n");
        ++missing;
      } else {
        p.print(content);
      }
    }
    co_return missing ? 1 : 0;
  }
  for (;;) {
    std::optional<std::string> chunk = co_await p.read_console(4096);
    if (!chunk) break;
    p.print(*chunk);
  }
  co_return 0;
}

// Deliberately nondeterministic: the counter lives in the host process,
// outside every space.
std::atomic<uint32_t> g_backdoor{0};

Task<uint32_t> nondet_main(Process& p) {
  p.print("nondet " + std::to_string(g_backdoor.fetch_add(1)) + "\n");
  co_return 0;
}

}  // namespace

std::vector<uint32_t> lcg_values(uint32_t seed, size_t count) {
  std::vector<uint32_t> v(count);
  uint32_t x = seed;
  for (auto& e : v) {
    x = x * 1103515245u + 12345u;
    e = ((x >> 16) & 0x7fff) % 1000;
  }
  return v;
}

std::vector<uint32_t> qsort_input(std::string_view pattern, size_t n, uint32_t seed) {
  std::vector<uint32_t> v(n);
  if (pattern == "random") {
    uint32_t x = seed;
    for (auto& e : v) {
      x = x * 1103515245u + 12345u;
      e = x ^ (x >> 13);
    }
  } else if (pattern == "sorted") {
    for (size_t i = 0; i < n; ++i) v[i] = uint32_t(i);
  } else if (pattern == "reverse") {
    for (size_t i = 0; i < n; ++i) v[i] = uint32_t(n - i);
  } else if (pattern == "constant") {
    std::fill(v.begin(), v.end(), seed);
  } else {
    throw std::invalid_argument("unknown pattern '" + std::string(pattern) + "'");
  }
  return v;
}

bool writer_syncs_after(uint32_t seed, uint32_t w, uint32_t j) {
  uint32_t h = seed * 0x9e3779b9u ^ (w + 1) * 0x85ebca6bu ^ (j + 1) * 0xc2b2ae35u;
  h ^= h >> 15;
  h *= 0x2c1b3c6du;
  h ^= h >> 12;
  return h % 3 == 0;
}

void add_corpus(ProgramTable& t, const CorpusOptions& opts) {
  add_runtime_programs(t);
  add_dsched_runner(t);
  add_process(t, "hello", hello_main);
  add_process(t, "echo", echo_main);
  add_process(t, "cat", cat_main);
  add_process(t, "md5search", guarded("md5search HEX MAXLEN THREADS", md5search_main));
  t.add_host("md5search.worker", md5search_worker);
  add_process(t, "md5tree", guarded("md5tree HEX MAXLEN DEPTH", md5tree_main));
  t.add_vm_source("md5vm", md5vm_source());
  add_process(t, "matmult", guarded("matmult N THREADS SEED", matmult_main));
  t.add_vm_source("matmult.worker", matmult_worker_source());
  add_process(t, "qsort", guarded("qsort N THREADS SEED PATTERN", qsort_main));
  t.add_host("qsort.worker", qsort_worker);
  add_process(t, "pmake", guarded("pmake WORKERS NAME:COST...", pmake_main));
  add_process(t, "pmake.task", guarded("pmake.task NAME COST", pmake_task));
  add_process(t, "writers", guarded("writers PROCS LINES SEED", writers_main));
  add_process(t, "writers.child", guarded("writers.child W LINES SEED", writers_child));
  add_process(t, "revisit", guarded("revisit ROUNDS PAGES", revisit_main));
  t.add_host("revisit.leaf", revisit_leaf);
  add_process(t, "swap", guarded("swap", swap_main));
  t.add_vm_source("swap.worker", kSwapWorker);
  std::string prelude(dsched_prelude());
  t.add_vm_source("prodcons", std::string(prodcons_source()) + prelude);
  t.add_vm_source("mutexcount", std::string(mutexcount_source()) + prelude);
  if (opts.test_backdoor) add_process(t, "nondet", nondet_main);
}

ProgramTable make_corpus(const CorpusOptions& opts) {
  ProgramTable t;
  add_corpus(t, opts);
  return t;
}

}  // namespace detspace::tools
