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

#include "detspace/cluster.h"

#include <sstream>
#include <stdexcept>

namespace detspace {

ClusterConfig ClusterConfig::parse(std::string_view text) {
  ClusterConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string v) {
      size_t b = v.find_first_not_of(" \t"), e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key != "nodes")
      throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
    size_t used = 0;
    unsigned long n = 0;
    try {
      n = std::stoul(value, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != value.size() || n < 1 || n > kMaxNodes)
      throw std::invalid_argument("nodes must be in 1.." + std::to_string(kMaxNodes));
    cfg.nodes = uint32_t(n);
  }
  return cfg;
}

std::string ClusterConfig::to_string() const { return "nodes=" + std::to_string(nodes); }

std::optional<ChildRef> resolve_child(uint32_t child_number, uint32_t home,
                                      uint32_t nodes) {
  uint32_t field = (child_number >> kLocalChildBits) & kNodeFieldMask;
  if (field >= nodes) return std::nullopt;
  return ChildRef{(home + field) % nodes, child_number & kLocalChildMask};
}

const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::kMigrate: return "migrate";
    case MsgKind::kPageRequest: return "page_request";
    case MsgKind::kPageReply: return "page_reply";
  }
  return "?";
}

MessageCounts count(const std::vector<Message>& msgs) {
  MessageCounts c;
  for (const Message& m : msgs) {
    switch (m.kind) {
      case MsgKind::kMigrate: ++c.migrate; break;
      case MsgKind::kPageRequest: ++c.page_request; break;
      case MsgKind::kPageReply: ++c.page_reply; break;
    }
  }
  return c;
}

std::string format_trace(const std::vector<Message>& msgs) {
  std::ostringstream os;
  for (const Message& m : msgs)
    os << m.space << ' ' << m.seq << ' ' << to_string(m.kind) << ' ' << m.from << ' '
       << m.to << ' ' << m.page << '\n';
  return os.str();
}

void SpaceTracker::emit(MsgKind kind, uint32_t from, uint32_t to, uint32_t page) {
  messages_.push_back({key_, seq_++, kind, from, to, page});
}

void SpaceTracker::on_access(uint32_t page, uint32_t version, bool write) {
  if (!enabled_) return;
  uint64_t s = slot(node_, page);
  if (write) {
    // Stores are read-modify-write: the previous version must be resident.
    auto prev = cache_.find(s);
    auto src = latest_.find(page);
    bool resident = prev != cache_.end() && prev->second + 1 == version;
    if (!resident && src != latest_.end() && src->second != node_) {
      emit(MsgKind::kPageRequest, node_, src->second, page);
      emit(MsgKind::kPageReply, src->second, node_, page);
    }
    cache_[s] = version;
    latest_[page] = node_;
    return;
  }
  auto it = cache_.find(s);
  if (it != cache_.end() && it->second == version) return;
  auto src = latest_.find(page);
  uint32_t from = src == latest_.end() ? home_ : src->second;
  if (from != node_) {
    emit(MsgKind::kPageRequest, node_, from, page);
    emit(MsgKind::kPageReply, from, node_, page);
  }
  cache_[s] = version;
}

void SpaceTracker::migrate(uint32_t to) {
  if (!enabled_ || to == node_) {
    node_ = to;
    return;
  }
  emit(MsgKind::kMigrate, node_, to, 0);
  node_ = to;
}

void SpaceTracker::adopt(const MemoryImage& mem) {
  if (!enabled_) return;
  for (const auto& [page, e] : mem.pages()) {
    cache_[slot(node_, page)] = e.version;
    latest_[page] = node_;
  }
}

}  // namespace detspace
