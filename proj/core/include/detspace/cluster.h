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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "detspace/memimg.h"

namespace detspace {

inline constexpr uint32_t kMaxNodes = 32;
inline constexpr unsigned kLocalChildBits = 11;
inline constexpr uint32_t kLocalChildMask = (1u << kLocalChildBits) - 1;
inline constexpr uint32_t kNodeFieldMask = 31;

struct ClusterConfig {
  uint32_t nodes = 1;

  // Plain-text topology: `nodes=N`, one key per line, `#` comments.
  static ClusterConfig parse(std::string_view text);
  std::string to_string() const;
};

struct ChildRef {
  uint32_t node = 0;
  uint32_t local = 0;
};

// Splits a 16-bit child number. The node field is relative to the caller's
// home: field f names node (home + f) mod n. Fields >= n name no node.
std::optional<ChildRef> resolve_child(uint32_t child_number, uint32_t home,
                                      uint32_t nodes);

enum class MsgKind : uint8_t { kMigrate, kPageRequest, kPageReply };
const char* to_string(MsgKind k);

struct Message {
  std::string space;  // incarnation path of the migrating space
  uint64_t seq = 0;   // per-space sequence number
  MsgKind kind = MsgKind::kMigrate;
  uint32_t from = 0;
  uint32_t to = 0;
  uint32_t page = 0;
  friend bool operator==(const Message&, const Message&) = default;
};

struct MessageCounts {
  uint64_t migrate = 0;
  uint64_t page_request = 0;
  uint64_t page_reply = 0;
  friend bool operator==(const MessageCounts&, const MessageCounts&) = default;
};

MessageCounts count(const std::vector<Message>& msgs);
// One line per message: "space seq kind from to page".
std::string format_trace(const std::vector<Message>& msgs);

// Residency and read-only page cache of one space. The space's pages are
// fetched on demand after it migrates; a node keeps the copies it fetched
// and reuses them while their version still matches.
class SpaceTracker : public PageObserver {
 public:
  SpaceTracker(std::string key, uint32_t home, bool enabled)
      : key_(std::move(key)), home_(home), node_(home), enabled_(enabled) {}

  void on_access(uint32_t page, uint32_t version, bool write) override;

  // Moves the space to `to`, recording a migrate message.
  void migrate(uint32_t to);
  // Marks every page of `mem` resident at the current node.
  void adopt(const MemoryImage& mem);

  const std::string& key() const { return key_; }
  uint32_t home() const { return home_; }
  uint32_t node() const { return node_; }
  bool enabled() const { return enabled_; }
  const std::vector<Message>& messages() const { return messages_; }
  std::vector<Message> take_messages() { return std::move(messages_); }

 private:
  static uint64_t slot(uint32_t node, uint32_t page) {
    return uint64_t(node) << 32 | page;
  }
  void emit(MsgKind kind, uint32_t from, uint32_t to, uint32_t page);

  std::string key_;
  uint32_t home_;
  uint32_t node_;
  bool enabled_;
  uint64_t seq_ = 0;
  std::unordered_map<uint64_t, uint32_t> cache_;   // (node, page) -> version
  std::unordered_map<uint32_t, uint32_t> latest_;  // page -> node of newest copy
  std::vector<Message> messages_;
};

}  // namespace detspace
