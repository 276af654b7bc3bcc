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

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace detspace {

inline constexpr uint32_t kPageSize = 4096;
inline constexpr uint32_t kPageShift = 12;
inline constexpr unsigned kAddressBits = 32;
inline constexpr uint64_t kAddressSpaceSize = uint64_t{1} << kAddressBits;
inline constexpr uint32_t kPageCount = uint32_t(kAddressSpaceSize >> kPageShift);

// Guest-visible page permissions. Kernel-side operations ignore them.
enum class Perm : uint8_t { kNone = 0, kRead = 1, kReadWrite = 3 };

const char* to_string(Perm p);
std::optional<Perm> perm_from_bits(uint32_t bits);

using PageBytes = std::array<uint8_t, kPageSize>;

// One page-table slot. `data` may be shared by any number of images and
// snapshots; it is mutated in place only while uniquely owned.
struct PageEntry {
  std::shared_ptr<PageBytes> data;
  Perm perm = Perm::kReadWrite;
  // Bumped whenever the page content of this slot may have changed.
  uint32_t version = 0;
};

using PageTable = std::map<uint32_t, PageEntry>;

enum class RangeError { kOk, kUnaligned, kOverflow };

// Kernel API ranges must start and end on page boundaries and fit inside the
// 32-bit address space.
RangeError check_range(uint64_t addr, uint64_t len);

class MemoryError : public std::runtime_error {
 public:
  MemoryError(RangeError kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  RangeError kind() const { return kind_; }

 private:
  RangeError kind_;
};

// Receives page-granular access notifications (used by the cluster layer to
// account demand paging). `version` is the slot version after the access.
class PageObserver {
 public:
  virtual ~PageObserver() = default;
  virtual void on_access(uint32_t page, uint32_t version, bool write) = 0;
};

class Snapshot {
 public:
  Snapshot() : table_(std::make_shared<const PageTable>()) {}

  const PageTable& table() const { return *table_; }
  bool empty() const { return table_->empty(); }
  std::optional<uint8_t> byte_at(uint32_t addr) const;
  // Byte value used by merge: unmapped pages read as zero.
  uint8_t merge_byte(uint32_t addr) const;

 private:
  friend class MemoryImage;
  explicit Snapshot(std::shared_ptr<const PageTable> t) : table_(std::move(t)) {}
  std::shared_ptr<const PageTable> table_;
};

struct MergeConflict {
  uint32_t addr;
  uint8_t parent;
  uint8_t child;
  uint8_t snapshot;
  friend bool operator==(const MergeConflict&, const MergeConflict&) = default;
};

struct MergeReport {
  uint64_t bytes_copied = 0;
  uint64_t pages_skipped = 0;
  std::vector<MergeConflict> conflicts;
};

// A space's private virtual memory. Single writer; snapshots and shared
// pages may be read concurrently from other threads.
class MemoryImage {
 public:
  MemoryImage() = default;
  MemoryImage(const MemoryImage&) = default;
  MemoryImage& operator=(const MemoryImage&) = default;
  MemoryImage(MemoryImage&&) noexcept = default;
  MemoryImage& operator=(MemoryImage&&) noexcept = default;

  // Guest accesses honour permissions. On fault they return false and, when
  // `fault` is non-null, store the first faulting address.
  bool guest_read(uint32_t addr, std::span<uint8_t> out,
                  uint32_t* fault = nullptr) const;
  bool guest_write(uint32_t addr, std::span<const uint8_t> in,
                   uint32_t* fault = nullptr);
  // Instruction fetch; needs at least read permission.
  bool guest_fetch(uint32_t addr, uint32_t& word) const;

  // Kernel accesses ignore permissions but still fail on unmapped pages.
  bool read(uint32_t addr, std::span<uint8_t> out) const;
  bool write(uint32_t addr, std::span<const uint8_t> in);

  void zero_range(uint64_t addr, uint64_t len);
  void set_perms(uint64_t addr, uint64_t len, Perm perm);
  Snapshot snapshot() const;

  std::optional<uint8_t> byte_at(uint32_t addr) const;
  uint8_t merge_byte(uint32_t addr) const;
  bool is_mapped(uint32_t page) const { return pages_.count(page) != 0; }
  std::optional<Perm> perm_of(uint32_t page) const;
  const PageTable& pages() const { return pages_; }
  size_t mapped_pages() const { return pages_.size(); }

  // Incremented by every mutation; lets callers cache decoded state.
  uint64_t generation() const { return generation_; }
  void bump_generation() { ++generation_; }

  void set_observer(PageObserver* obs) { observer_ = obs; }
  PageObserver* observer() const { return observer_; }

  // Unaligned page-spanning ranges are fine here; checks are by page.
  bool range_mapped(uint32_t addr, uint32_t len) const;

  // Direct page access for the interpreter's translation cache. A pointer
  // returned by lookup() stays valid until the page is unmapped.
  PageEntry* lookup(uint32_t page) {
    auto it = pages_.find(page);
    return it == pages_.end() ? nullptr : &it->second;
  }
  // Makes `e` uniquely owned; the returned bytes may be written until the
  // image is next copied or snapshotted. Call note_write() after each store.
  uint8_t* writable_bytes(PageEntry& e) { return writable(e).data(); }
  void note_write(uint32_t page, PageEntry& e) {
    ++e.version;
    ++generation_;
    notify(page, e.version, true);
  }
  void note_read(uint32_t page, const PageEntry& e) const {
    notify(page, e.version, false);
  }

 private:
  friend void copy_range(const MemoryImage&, uint64_t, MemoryImage&, uint64_t,
                         uint64_t);
  friend MergeReport merge(MemoryImage&, const MemoryImage&, const Snapshot&,
                           uint64_t, uint64_t);

  const PageEntry* entry(uint32_t page) const;
  // Returns a uniquely owned, writable page, cloning a shared one.
  PageBytes& writable(PageEntry& e);
  void notify(uint32_t page, uint32_t version, bool write) const {
    if (observer_) observer_->on_access(page, version, write);
  }

  PageTable pages_;
  uint64_t generation_ = 0;
  PageObserver* observer_ = nullptr;
};

// Logical copy of [src_addr, src_addr+len) to dst; shares page references.
// Throws MemoryError on unaligned or overflowing ranges.
void copy_range(const MemoryImage& src, uint64_t src_addr, MemoryImage& dst,
                uint64_t dst_addr, uint64_t len);

// Three-way byte merge of the child's changes since `snap` into `parent`,
// over [addr, addr+len) at identical addresses on both sides. A byte changed
// on both sides is a conflict even when both sides agree; the parent byte is
// left as is. Non-conflicting bytes merged before a conflict stay merged.
MergeReport merge(MemoryImage& parent, const MemoryImage& child,
                  const Snapshot& snap, uint64_t addr, uint64_t len);

// Shared all-zero page backing freshly zeroed ranges.
const std::shared_ptr<PageBytes>& zero_page();

}  // namespace detspace
