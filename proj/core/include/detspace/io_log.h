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
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace detspace {

// Input devices readable by the root space.
namespace dev {
inline constexpr uint32_t kConsole = 0;  // console input bytes
inline constexpr uint32_t kFile = 1;     // initial file: "path\0content"
inline constexpr uint32_t kArgs = 2;     // job command line, NUL separated
inline constexpr uint32_t kClock = 3;    // clock value supplied between jobs
// Output channels written by the root space.
inline constexpr uint32_t kConsoleOut = 0;
inline constexpr uint32_t kFsDump = 0x100;
inline constexpr uint32_t kStatus = 0xffff;
}  // namespace dev

struct Record {
  uint32_t device = 0;
  std::string bytes;
  friend bool operator==(const Record&, const Record&) = default;
};

class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sequence of (u32 device, u32 length, bytes) records, little-endian. Used
// for both the input log and the root's output.
class RecordLog {
 public:
  RecordLog() = default;
  explicit RecordLog(std::vector<Record> records) : records_(std::move(records)) {}

  void add(uint32_t device, std::string_view bytes) {
    records_.push_back({device, std::string(bytes)});
  }
  const std::vector<Record>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  size_t size() const { return records_.size(); }

  // Concatenation of every record on `device`.
  std::string collect(uint32_t device) const;

  std::string encode() const;
  static RecordLog decode(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static RecordLog load(const std::filesystem::path& path);

  friend bool operator==(const RecordLog&, const RecordLog&) = default;

 private:
  std::vector<Record> records_;
};

using InputLog = RecordLog;
using SystemOutput = RecordLog;

}  // namespace detspace
