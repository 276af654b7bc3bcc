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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "testutil.h"

namespace detspace {
namespace {

using testing::bytes_of;
using testing::fill_random;
using testing::oracle_merge;

constexpr uint32_t kBase = 0x100000;

std::vector<uint8_t> pattern(uint8_t v, size_t n = kPageSize) { return std::vector<uint8_t>(n, v); }

TEST(CopyRange, CopiesPatternIntoEmptyImage) {
  MemoryImage src, dst;
  src.zero_range(kBase, kPageSize);
  src.write(kBase, pattern(0xab));
  copy_range(src, kBase, dst, 0x5000, kPageSize);
  EXPECT_EQ(bytes_of(dst, 0x5000, kPageSize), pattern(0xab));
}

TEST(CopyRange, LaterSourceWriteDoesNotLeak) {
  MemoryImage src, dst;
  src.zero_range(kBase, kPageSize);
  src.write(kBase, pattern(0x11));
  copy_range(src, kBase, dst, kBase, kPageSize);
  uint8_t b = 0x99;
  src.write(kBase + 7, std::span<const uint8_t>(&b, 1));
  EXPECT_EQ(*dst.byte_at(kBase + 7), 0x11);
  dst.write(kBase + 8, std::span<const uint8_t>(&b, 1));
  EXPECT_EQ(*src.byte_at(kBase + 8), 0x11);
}

TEST(CopyRange, SixtyFourRandomPagesMatchByteCopy) {
  std::mt19937 rng(5);
  MemoryImage src, dst;
  fill_random(src, kBase, 64, rng);
  std::vector<uint8_t> expect = bytes_of(src, kBase, 64 * kPageSize);
  copy_range(src, kBase, dst, 0x40000000, 64 * kPageSize);
  EXPECT_EQ(bytes_of(dst, 0x40000000, 64 * kPageSize), expect);
}

TEST(CopyRange, RejectsBadRanges) {
  MemoryImage a, b;
  EXPECT_THROW(copy_range(a, 1, b, 0, kPageSize), MemoryError);
  EXPECT_THROW(copy_range(a, 0, b, 0, 100), MemoryError);
  try {
    copy_range(a, 0xfffff000, b, 0, 2 * kPageSize);
    FAIL();
  } catch (const MemoryError& e) {
    EXPECT_EQ(e.kind(), RangeError::kOverflow);
  }
}

TEST(CopyRange, CarriesUnmappedPages) {
  MemoryImage src, dst;
  dst.zero_range(kBase, 2 * kPageSize);
  src.zero_range(kBase, kPageSize);
  copy_range(src, kBase, dst, kBase, 2 * kPageSize);
  EXPECT_TRUE(dst.is_mapped(kBase >> kPageShift));
  EXPECT_FALSE(dst.is_mapped((kBase >> kPageShift) + 1));
}

TEST(ZeroRange, ClearsAndMaps) {
  MemoryImage m;
  m.zero_range(kBase, kPageSize);
  m.write(kBase, pattern(0xff));
  m.zero_range(kBase, kPageSize);
  EXPECT_EQ(bytes_of(m, kBase, kPageSize), pattern(0));
  EXPECT_FALSE(m.is_mapped(0x300));
  m.zero_range(0x300000, kPageSize);
  EXPECT_TRUE(m.is_mapped(0x300));
  EXPECT_EQ(*m.byte_at(0x300000 + 17), 0);
  EXPECT_THROW(m.zero_range(kBase + 1, kPageSize), MemoryError);
}

TEST(ZeroRange, ThenMergeWithUnchangedSnapshotCopiesNothing) {
  MemoryImage parent, child;
  child.zero_range(kBase, 2 * kPageSize);
  Snapshot snap = child.snapshot();
  child.zero_range(kBase, 2 * kPageSize);
  MergeReport r = merge(parent, child, snap, kBase, 2 * kPageSize);
  EXPECT_EQ(r.bytes_copied, 0u);
  EXPECT_TRUE(r.conflicts.empty());
}

TEST(Perms, GuestAccessObeysPermissions) {
  MemoryImage m;
  m.zero_range(kBase, kPageSize);
  uint8_t b = 1;
  m.set_perms(kBase, kPageSize, Perm::kRead);
  uint32_t fault = 0;
  EXPECT_FALSE(m.guest_write(kBase + 4, std::span<const uint8_t>(&b, 1), &fault));
  EXPECT_EQ(fault, kBase + 4);
  EXPECT_TRUE(m.guest_read(kBase, std::span<uint8_t>(&b, 1)));
  m.set_perms(kBase, kPageSize, Perm::kNone);
  EXPECT_FALSE(m.guest_read(kBase, std::span<uint8_t>(&b, 1)));
  m.set_perms(kBase, kPageSize, Perm::kReadWrite);
  EXPECT_TRUE(m.guest_write(kBase, std::span<const uint8_t>(&b, 1)));
}

TEST(Perms, KernelAccessIgnoresPermissions) {
  MemoryImage m, other;
  m.zero_range(kBase, kPageSize);
  m.set_perms(kBase, kPageSize, Perm::kNone);
  uint8_t b = 7;
  EXPECT_TRUE(m.write(kBase, std::span<const uint8_t>(&b, 1)));
  copy_range(m, kBase, other, kBase, kPageSize);
  EXPECT_EQ(*other.byte_at(kBase), 7);
}

TEST(Perms, UnmappedAccessFaults) {
  MemoryImage m;
  uint8_t b;
  EXPECT_FALSE(m.guest_read(kBase, std::span<uint8_t>(&b, 1)));
  EXPECT_FALSE(m.read(kBase, std::span<uint8_t>(&b, 1)));
  // A store straddling into an unmapped page has no partial effect.
  m.zero_range(kBase, kPageSize);
  uint8_t two[2] = {5, 5};
  EXPECT_FALSE(m.guest_write(kBase + kPageSize - 1, two));
  EXPECT_EQ(*m.byte_at(kBase + kPageSize - 1), 0);
}

TEST(SnapshotTest, ImmutableAfterWrites) {
  MemoryImage m;
  m.zero_range(kBase, kPageSize);
  m.write(kBase, pattern(3));
  Snapshot s = m.snapshot();
  m.write(kBase, pattern(4));
  EXPECT_EQ(bytes_of(s, kBase, kPageSize), pattern(3));
  EXPECT_TRUE(MemoryImage().snapshot().empty());
}

TEST(SnapshotTest, EqualsImageUnderByteCompare) {
  std::mt19937 rng(9);
  MemoryImage m;
  fill_random(m, kBase, 8, rng);
  Snapshot s = m.snapshot();
  EXPECT_EQ(bytes_of(s, kBase, 8 * kPageSize), bytes_of(m, kBase, 8 * kPageSize));
}

// x and y live at fixed addresses; one child swaps x<-y, the other y<-x.
TEST(Merge, SwapScenarioAlwaysSwaps) {
  const uint32_t x = kBase, y = kBase + 64;
  MemoryImage parent;
  parent.zero_range(kBase, kPageSize);
  uint8_t one = 1, two = 2;
  parent.write(x, std::span<const uint8_t>(&one, 1));
  parent.write(y, std::span<const uint8_t>(&two, 1));
  MemoryImage a = parent, b = parent;
  Snapshot sa = a.snapshot(), sb = b.snapshot();
  a.write(x, std::span<const uint8_t>(&two, 1));
  b.write(y, std::span<const uint8_t>(&one, 1));
  EXPECT_TRUE(merge(parent, a, sa, kBase, kPageSize).conflicts.empty());
  EXPECT_TRUE(merge(parent, b, sb, kBase, kPageSize).conflicts.empty());
  EXPECT_EQ(*parent.byte_at(x), 2);
  EXPECT_EQ(*parent.byte_at(y), 1);
}

TEST(Merge, UnchangedChildIsNoOp) {
  std::mt19937 rng(1);
  MemoryImage parent, child;
  fill_random(child, kBase, 4, rng);
  fill_random(parent, kBase, 4, rng);
  Snapshot s = child.snapshot();
  auto before = bytes_of(parent, kBase, 4 * kPageSize);
  MergeReport r = merge(parent, child, s, kBase, 4 * kPageSize);
  EXPECT_EQ(r.bytes_copied, 0u);
  EXPECT_TRUE(r.conflicts.empty());
  EXPECT_EQ(r.pages_skipped, 4u);
  EXPECT_EQ(bytes_of(parent, kBase, 4 * kPageSize), before);
}

TEST(Merge, SameValueOnBothSidesIsConflict) {
  MemoryImage parent;
  parent.zero_range(kBase, kPageSize);
  MemoryImage child = parent;
  Snapshot s = child.snapshot();
  uint8_t v = 9;
  parent.write(kBase + 5, std::span<const uint8_t>(&v, 1));
  child.write(kBase + 5, std::span<const uint8_t>(&v, 1));
  MergeReport r = merge(parent, child, s, kBase, kPageSize);
  ASSERT_EQ(r.conflicts.size(), 1u);
  EXPECT_EQ(r.conflicts[0], (MergeConflict{kBase + 5, 9, 9, 0}));
}

TEST(Merge, EarlierBytesStayMergedAfterConflict) {
  MemoryImage parent;
  parent.zero_range(kBase, kPageSize);
  MemoryImage child = parent;
  Snapshot s = child.snapshot();
  uint8_t v = 1, w = 2;
  child.write(kBase, std::span<const uint8_t>(&v, 1));
  child.write(kBase + 10, std::span<const uint8_t>(&v, 1));
  parent.write(kBase + 10, std::span<const uint8_t>(&w, 1));
  MergeReport r = merge(parent, child, s, kBase, kPageSize);
  EXPECT_EQ(r.bytes_copied, 1u);
  EXPECT_EQ(r.conflicts.size(), 1u);
  EXPECT_EQ(*parent.byte_at(kBase), 1);
  EXPECT_EQ(*parent.byte_at(kBase + 10), 2);
}

TEST(Merge, UnmappedPagesReadAsZero) {
  MemoryImage parent, child;
  Snapshot s = child.snapshot();
  child.zero_range(kBase, kPageSize);
  uint8_t v = 4;
  child.write(kBase + 3, std::span<const uint8_t>(&v, 1));
  MergeReport r = merge(parent, child, s, kBase, kPageSize);
  EXPECT_EQ(r.bytes_copied, 1u);
  EXPECT_EQ(*parent.byte_at(kBase + 3), 4);
}

// Random triples built by mutating a shared base differently on each side.
struct Triple {
  MemoryImage parent, child;
  Snapshot snap;
};

Triple random_triple(std::mt19937& rng, uint32_t pages) {
  Triple t;
  MemoryImage base;
  fill_random(base, kBase, pages, rng);
  // Sparse small-alphabet values make equal-value collisions common.
  for (uint32_t i = 0; i < pages * 64; ++i) {
    uint8_t v = uint8_t(rng() % 3);
    base.write(kBase + rng() % (pages * kPageSize), std::span<const uint8_t>(&v, 1));
  }
  t.parent = base;
  t.child = base;
  t.snap = t.child.snapshot();
  auto mutate = [&](MemoryImage& m) {
    uint32_t mode = rng() % 4;
    if (mode == 0) return;  // untouched
    uint32_t n = rng() % 200;
    for (uint32_t i = 0; i < n; ++i) {
      uint8_t v = uint8_t(rng() % 3);
      uint32_t page = mode == 1 ? 0 : rng() % pages;
      m.write(kBase + page * kPageSize + rng() % kPageSize, std::span<const uint8_t>(&v, 1));
    }
  };
  mutate(t.parent);
  mutate(t.child);
  return t;
}

TEST(Merge, RandomTriplesMatchPerByteOracle) {
  std::mt19937 rng(2024);
  for (int i = 0; i < 300; ++i) {
    Triple t = random_triple(rng, 4);
    auto o = oracle_merge(t.parent, t.child, t.snap, kBase, 4 * kPageSize);
    MergeReport r = merge(t.parent, t.child, t.snap, kBase, 4 * kPageSize);
    ASSERT_EQ(bytes_of(t.parent, kBase, 4 * kPageSize), o.parent) << "case " << i;
    ASSERT_EQ(r.conflicts, o.conflicts) << "case " << i;
    ASSERT_EQ(r.bytes_copied, o.copied) << "case " << i;
  }
}

// Conflict strictness makes a second merge report the first merge's copied
// bytes as conflicts; bytes and copied count are idempotent.
TEST(Merge, SecondMergeCopiesNothing) {
  std::mt19937 rng(77);
  for (int i = 0; i < 50; ++i) {
    Triple t = random_triple(rng, 4);
    auto before = bytes_of(t.parent, kBase, 4 * kPageSize);
    MergeReport first = merge(t.parent, t.child, t.snap, kBase, 4 * kPageSize);
    auto after = bytes_of(t.parent, kBase, 4 * kPageSize);
    MergeReport second = merge(t.parent, t.child, t.snap, kBase, 4 * kPageSize);
    EXPECT_EQ(second.bytes_copied, 0u);
    EXPECT_EQ(bytes_of(t.parent, kBase, 4 * kPageSize), after);
    std::vector<uint32_t> expect;
    for (auto& c : first.conflicts) expect.push_back(c.addr);
    for (uint32_t a = 0; a < 4 * kPageSize; ++a)
      if (before[a] != after[a]) expect.push_back(kBase + a);
    std::sort(expect.begin(), expect.end());
    std::vector<uint32_t> got;
    for (auto& c : second.conflicts) got.push_back(c.addr);
    EXPECT_EQ(got, expect);
  }
}

TEST(Merge, PageSkipChangesNothingObservable) {
  std::mt19937 rng(3);
  MemoryImage parent;
  fill_random(parent, kBase, 16, rng);
  MemoryImage child = parent;
  Snapshot s = child.snapshot();
  uint8_t v = 0x42;
  child.write(kBase + 5 * kPageSize + 1, std::span<const uint8_t>(&v, 1));
  auto o = oracle_merge(parent, child, s, kBase, 16 * kPageSize);
  MergeReport r = merge(parent, child, s, kBase, 16 * kPageSize);
  EXPECT_EQ(r.pages_skipped, 15u);
  EXPECT_EQ(bytes_of(parent, kBase, 16 * kPageSize), o.parent);
}

}  // namespace
}  // namespace detspace
