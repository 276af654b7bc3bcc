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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "detspace/task.h"

namespace detspace {

class Guest;

enum class FileKind : uint8_t { kRegular = 0, kAppend = 1, kTombstone = 2 };
const char* to_string(FileKind k);

// (counter, writer). A replica's file changed since a base iff its version
// differs from the base's; distinct processes never produce equal versions
// because the writer ids differ.
struct FileVersion {
  uint32_t counter = 0;
  uint32_t writer = 0;
  friend bool operator==(const FileVersion&, const FileVersion&) = default;
};

struct FileNode {
  FileKind kind = FileKind::kRegular;
  std::string content;
  FileVersion version;
  bool conflict = false;
  bool sealed = false;  // append-only: no more bytes will ever arrive
  friend bool operator==(const FileNode&, const FileNode&) = default;
};

enum class FsError { kOk, kNotFound, kConflict, kFull, kWrongKind };
const char* to_string(FsError e);

class FsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fspath {
inline constexpr std::string_view kConsoleIn = "/dev/console_in";
inline constexpr std::string_view kConsoleOut = "/dev/console_out";
}  // namespace fspath

struct ReconcileReport {
  std::vector<std::string> from_child;  // child-only changes taken
  std::vector<std::string> conflicts;   // newly flagged regular files
  std::vector<std::string> appended;    // cross-appended append-only files
  friend bool operator==(const ReconcileReport&, const ReconcileReport&) = default;
};

// One process's complete replica. Every mutation is local; `capacity` bounds
// the serialized size so the image always fits its memory region.
class FsImage {
 public:
  explicit FsImage(uint32_t capacity = 0x0040'0000) : capacity_(capacity) {}

  uint32_t capacity() const { return capacity_; }
  const std::map<std::string, FileNode>& files() const { return files_; }
  // Live (non-tombstone) node or null.
  const FileNode* find(std::string_view path) const;
  bool exists(std::string_view path) const { return find(path) != nullptr; }

  FsError read(std::string_view path, std::string& out) const;
  // Replaces a regular file (creating it). Clears a conflict flag.
  FsError write(std::string_view path, std::string_view content, uint32_t writer);
  // Appends to an append-only file, creating it.
  FsError append(std::string_view path, std::string_view bytes, uint32_t writer);
  FsError remove(std::string_view path, uint32_t writer);
  FsError seal(std::string_view path, uint32_t writer);
  std::vector<std::string> list(std::string_view prefix = "/") const;

  // Deterministic encoding: "DSF1", u32 total size, u32 count, then nodes
  // in path order.
  std::string serialize() const;
  static FsImage parse(std::string_view bytes, uint32_t capacity);
  size_t serialized_size() const { return size_; }

  friend bool operator==(const FsImage& a, const FsImage& b) { return a.files_ == b.files_; }

 private:
  friend FsImage reconcile(FsImage&, const FsImage&, const FsImage&, ReconcileReport*);
  FsError store(std::string_view path, FileNode node);
  static size_t node_size(std::string_view path, const FileNode& n);

  uint32_t capacity_;
  std::map<std::string, FileNode> files_;
  size_t size_ = 12;
};

// Three-way reconciliation of a child replica into its parent, given the
// child's base (its state at the previous synchronization). Returns the
// child's new replica, which is also its next base.
//   child-only change: child wins     parent-only change: parent keeps
//   both changed, append-only: parent = P + C[base:], child = C + P[base:]
//   deleted on both sides: stays deleted
//   both changed otherwise: parent's copy kept, conflict flag set
// Conflict flags are never cleared here; `sealed` is ORed.
FsImage reconcile(FsImage& parent, const FsImage& child, const FsImage& base,
                  ReconcileReport* report = nullptr);

// Region I/O through a host-task guest. An unformatted (all zero) region
// reads as an empty image.
FsImage load_fs(const Guest& g, uint32_t addr, uint32_t capacity);
void store_fs(Guest& g, uint32_t addr, const FsImage& fs);

}  // namespace detspace
