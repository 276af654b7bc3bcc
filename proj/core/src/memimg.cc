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

#include "detspace/memimg.h"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <sstream>

namespace detspace {

namespace {

constexpr uint32_t page_of(uint64_t addr) { return uint32_t(addr >> kPageShift); }
constexpr uint32_t offset_in_page(uint64_t addr) {
  return uint32_t(addr & (kPageSize - 1));
}

void require_range(uint64_t addr, uint64_t len) {
  RangeError err = check_range(addr, len);
  if (err == RangeError::kOk) return;
  std::ostringstream os;
  os << (err == RangeError::kUnaligned ? "unaligned" : "overflowing")
     << " range addr=0x" << std::hex << addr << " len=0x" << len;
  throw MemoryError(err, os.str());
}

bool perm_allows(Perm p, bool write) {
  return write ? p == Perm::kReadWrite : p != Perm::kNone;
}

}  // namespace

const char* to_string(Perm p) {
  switch (p) {
    case Perm::kNone: return "none";
    case Perm::kRead: return "r";
    case Perm::kReadWrite: return "rw";
  }
  return "?";
}

std::optional<Perm> perm_from_bits(uint32_t bits) {
  switch (bits) {
    case 0: return Perm::kNone;
    case 1: return Perm::kRead;
    case 3: return Perm::kReadWrite;
    default: return std::nullopt;
  }
}

RangeError check_range(uint64_t addr, uint64_t len) {
  if ((addr | len) & (kPageSize - 1)) return RangeError::kUnaligned;
  if (addr > kAddressSpaceSize || len > kAddressSpaceSize - addr)
    return RangeError::kOverflow;
  return RangeError::kOk;
}

const std::shared_ptr<PageBytes>& zero_page() {
  static const std::shared_ptr<PageBytes> page = std::make_shared<PageBytes>();
  return page;
}

std::optional<uint8_t> Snapshot::byte_at(uint32_t addr) const {
  auto it = table_->find(page_of(addr));
  if (it == table_->end()) return std::nullopt;
  return (*it->second.data)[offset_in_page(addr)];
}

uint8_t Snapshot::merge_byte(uint32_t addr) const {
  return byte_at(addr).value_or(0);
}

const PageEntry* MemoryImage::entry(uint32_t page) const {
  auto it = pages_.find(page);
  return it == pages_.end() ? nullptr : &it->second;
}

std::optional<Perm> MemoryImage::perm_of(uint32_t page) const {
  const PageEntry* e = entry(page);
  if (!e) return std::nullopt;
  return e->perm;
}

PageBytes& MemoryImage::writable(PageEntry& e) {
  // use_count() is a relaxed load; pair it with an acquire fence so prior
  // reads of this page by a releasing owner happen before our writes.
  if (e.data.use_count() == 1) {
    std::atomic_thread_fence(std::memory_order_acquire);
  } else {
    e.data = std::make_shared<PageBytes>(*e.data);
  }
  return *e.data;
}

std::optional<uint8_t> MemoryImage::byte_at(uint32_t addr) const {
  const PageEntry* e = entry(page_of(addr));
  if (!e) return std::nullopt;
  return (*e->data)[offset_in_page(addr)];
}

uint8_t MemoryImage::merge_byte(uint32_t addr) const {
  return byte_at(addr).value_or(0);
}

bool MemoryImage::range_mapped(uint32_t addr, uint32_t len) const {
  if (len == 0) return true;
  uint64_t last = uint64_t(addr) + len - 1;
  if (last >= kAddressSpaceSize) return false;
  for (uint64_t p = page_of(addr); p <= page_of(last); ++p)
    if (!entry(uint32_t(p))) return false;
  return true;
}

bool MemoryImage::guest_read(uint32_t addr, std::span<uint8_t> out,
                             uint32_t* fault) const {
  uint64_t a = addr;
  size_t done = 0;
  while (done < out.size()) {
    if (a >= kAddressSpaceSize) {
      if (fault) *fault = uint32_t(a);
      return false;
    }
    const PageEntry* e = entry(page_of(a));
    if (!e || !perm_allows(e->perm, false)) {
      if (fault) *fault = uint32_t(a);
      return false;
    }
    uint32_t off = offset_in_page(a);
    size_t n = std::min<size_t>(kPageSize - off, out.size() - done);
    std::memcpy(out.data() + done, e->data->data() + off, n);
    notify(page_of(a), e->version, false);
    done += n;
    a += n;
  }
  return true;
}

bool MemoryImage::guest_write(uint32_t addr, std::span<const uint8_t> in,
                              uint32_t* fault) {
  // Check the whole range first so a faulting store has no partial effect.
  uint64_t a = addr;
  for (size_t done = 0; done < in.size();) {
    const PageEntry* e = a < kAddressSpaceSize ? entry(page_of(a)) : nullptr;
    if (!e || !perm_allows(e->perm, true)) {
      if (fault) *fault = uint32_t(a);
      return false;
    }
    size_t n = std::min<size_t>(kPageSize - offset_in_page(a), in.size() - done);
    done += n;
    a += n;
  }
  return write(addr, in);
}

bool MemoryImage::guest_fetch(uint32_t addr, uint32_t& word) const {
  uint8_t buf[4];
  if (!guest_read(addr, buf)) return false;
  word = uint32_t(buf[0]) | uint32_t(buf[1]) << 8 | uint32_t(buf[2]) << 16 |
         uint32_t(buf[3]) << 24;
  return true;
}

bool MemoryImage::read(uint32_t addr, std::span<uint8_t> out) const {
  uint64_t a = addr;
  size_t done = 0;
  while (done < out.size()) {
    const PageEntry* e = a < kAddressSpaceSize ? entry(page_of(a)) : nullptr;
    if (!e) return false;
    uint32_t off = offset_in_page(a);
    size_t n = std::min<size_t>(kPageSize - off, out.size() - done);
    std::memcpy(out.data() + done, e->data->data() + off, n);
    notify(page_of(a), e->version, false);
    done += n;
    a += n;
  }
  return true;
}

bool MemoryImage::write(uint32_t addr, std::span<const uint8_t> in) {
  if (!range_mapped(addr, uint32_t(in.size())) ||
      uint64_t(addr) + in.size() > kAddressSpaceSize)
    return false;
  uint64_t a = addr;
  size_t done = 0;
  while (done < in.size()) {
    PageEntry& e = pages_.find(page_of(a))->second;
    uint32_t off = offset_in_page(a);
    size_t n = std::min<size_t>(kPageSize - off, in.size() - done);
    std::memcpy(writable(e).data() + off, in.data() + done, n);
    ++e.version;
    notify(page_of(a), e.version, true);
    done += n;
    a += n;
  }
  ++generation_;
  return true;
}

void MemoryImage::zero_range(uint64_t addr, uint64_t len) {
  require_range(addr, len);
  for (uint64_t p = page_of(addr); p < page_of(addr) + (len >> kPageShift); ++p) {
    PageEntry& e = pages_[uint32_t(p)];
    e.data = zero_page();
    e.perm = Perm::kReadWrite;
    ++e.version;
    notify(uint32_t(p), e.version, true);
  }
  ++generation_;
}

void MemoryImage::set_perms(uint64_t addr, uint64_t len, Perm perm) {
  require_range(addr, len);
  uint32_t first = page_of(addr);
  uint64_t count = len >> kPageShift;
  for (auto it = pages_.lower_bound(first);
       it != pages_.end() && it->first < first + count; ++it)
    it->second.perm = perm;
  ++generation_;
}

Snapshot MemoryImage::snapshot() const {
  return Snapshot(std::make_shared<const PageTable>(pages_));
}

void copy_range(const MemoryImage& src, uint64_t src_addr, MemoryImage& dst,
                uint64_t dst_addr, uint64_t len) {
  require_range(src_addr, len);
  require_range(dst_addr, len);
  if (len == 0) return;
  uint32_t sfirst = page_of(src_addr);
  uint32_t dfirst = page_of(dst_addr);
  uint64_t count = len >> kPageShift;

  // Collect first: src and dst may be the same image with overlapping ranges.
  std::vector<std::pair<uint32_t, PageEntry>> moved;
  for (auto it = src.pages_.lower_bound(sfirst);
       it != src.pages_.end() && it->first < sfirst + count; ++it) {
    moved.emplace_back(it->first - sfirst, it->second);
    src.notify(it->first, it->second.version, false);
  }

  // Existing destination slots keep their version history so that every
  // content change of a slot yields a fresh version number.
  std::map<uint32_t, uint32_t> old_versions;
  {
    auto it = dst.pages_.lower_bound(dfirst);
    while (it != dst.pages_.end() && it->first < dfirst + count) {
      old_versions[it->first] = it->second.version;
      it = dst.pages_.erase(it);
    }
  }
  for (auto& [rel, e] : moved) {
    uint32_t page = dfirst + rel;
    auto ov = old_versions.find(page);
    e.version = (ov == old_versions.end() ? 0 : ov->second) + 1;
    uint32_t v = e.version;
    dst.pages_[page] = std::move(e);
    dst.notify(page, v, true);
  }
  ++dst.generation_;
}

MergeReport merge(MemoryImage& parent, const MemoryImage& child,
                  const Snapshot& snap, uint64_t addr, uint64_t len) {
  require_range(addr, len);
  MergeReport report;
  uint32_t first = page_of(addr);
  uint64_t count = len >> kPageShift;
  const PageTable& ct = child.pages_;
  const PageTable& st = snap.table();

  // Only pages present in the child or the snapshot can differ.
  std::vector<uint32_t> candidates;
  {
    auto ci = ct.lower_bound(first);
    auto si = st.lower_bound(first);
    uint64_t end = uint64_t(first) + count;
    while ((ci != ct.end() && ci->first < end) ||
           (si != st.end() && si->first < end)) {
      bool cv = ci != ct.end() && ci->first < end;
      bool sv = si != st.end() && si->first < end;
      if (cv && (!sv || ci->first < si->first)) {
        candidates.push_back(ci->first);
        ++ci;
      } else if (sv && (!cv || si->first < ci->first)) {
        candidates.push_back(si->first);
        ++si;
      } else {
        if (ci->second.data != si->second.data) {
          candidates.push_back(ci->first);
        } else {
          ++report.pages_skipped;
        }
        ++ci;
        ++si;
      }
    }
  }

  static const PageBytes kZero{};
  for (uint32_t page : candidates) {
    auto ci = ct.find(page);
    auto si = st.find(page);
    const PageBytes& cb = ci == ct.end() ? kZero : *ci->second.data;
    const PageBytes& sb = si == st.end() ? kZero : *si->second.data;
    if (&cb == &sb || std::memcmp(cb.data(), sb.data(), kPageSize) == 0) {
      ++report.pages_skipped;
      child.notify(page, ci == ct.end() ? 0 : ci->second.version, false);
      continue;
    }
    if (ci != ct.end()) child.notify(page, ci->second.version, false);

    auto pi = parent.pages_.find(page);
    const PageBytes& pb = pi == parent.pages_.end() ? kZero : *pi->second.data;

    // Collect the bytes to write before touching the parent page.
    std::vector<uint32_t> writes;
    for (uint32_t off = 0; off < kPageSize; ++off) {
      uint8_t c = cb[off], s = sb[off];
      if (c == s) continue;
      uint8_t p = pb[off];
      if (p == s) {
        writes.push_back(off);
      } else {
        report.conflicts.push_back(
            {(page << kPageShift) + off, p, c, s});
      }
    }
    if (writes.empty()) continue;
    report.bytes_copied += writes.size();

    if (pi == parent.pages_.end()) {
      pi = parent.pages_.emplace(page, PageEntry{zero_page(), Perm::kReadWrite, 0})
               .first;
    }
    PageEntry& pe = pi->second;
    if (ci != ct.end() && si != st.end() && pe.data == si->second.data) {
      // Parent page untouched since the snapshot: share the child's page.
      pe.data = ci->second.data;
    } else {
      PageBytes& dst = parent.writable(pe);
      for (uint32_t off : writes) dst[off] = cb[off];
    }
    ++pe.version;
    parent.notify(page, pe.version, true);
  }
  ++parent.generation_;
  return report;
}

}  // namespace detspace
