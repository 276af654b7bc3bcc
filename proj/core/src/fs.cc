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

#include "detspace/fs.h"

#include <algorithm>
#include <cstring>

#include "detspace/guest.h"

namespace detspace {

const char* to_string(FileKind k) {
  switch (k) {
    case FileKind::kRegular: return "regular";
    case FileKind::kAppend: return "append";
    case FileKind::kTombstone: return "tombstone";
  }
  return "?";
}

const char* to_string(FsError e) {
  switch (e) {
    case FsError::kOk: return "ok";
    case FsError::kNotFound: return "not_found";
    case FsError::kConflict: return "conflict";
    case FsError::kFull: return "full";
    case FsError::kWrongKind: return "wrong_kind";
  }
  return "?";
}

namespace {

constexpr uint32_t kMagic = 0x31465344;  // "DSF1"
constexpr size_t kHeader = 12;

void put32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char(uint8_t(v >> (8 * i))));
}

struct Reader {
  std::string_view in;
  size_t at = 0;
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(in[at + i])) << (8 * i);
    at += 4;
    return v;
  }
  uint8_t u8() {
    need(1);
    return uint8_t(in[at++]);
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s(in.substr(at, n));
    at += n;
    return s;
  }
  void need(size_t n) {
    if (in.size() - at < n) throw FsFormatError("truncated file system image");
  }
};

FileVersion bump(FileVersion v, uint32_t writer) { return {v.counter + 1, writer}; }

// Version both sides agree on after a merge of two distinct versions.
FileVersion joined(const FileVersion& a, const FileVersion& b) {
  uint32_t w = a.writer * 0x9E3779B1u ^ (b.writer + 0x7F4A7C15u + (a.writer << 6));
  return {std::max(a.counter, b.counter) + 1, w};
}

}  // namespace

size_t FsImage::node_size(std::string_view path, const FileNode& n) {
  return 4 + path.size() + 2 + 8 + 4 + n.content.size();
}

const FileNode* FsImage::find(std::string_view path) const {
  auto it = files_.find(std::string(path));
  if (it == files_.end() || it->second.kind == FileKind::kTombstone) return nullptr;
  return &it->second;
}

FsError FsImage::read(std::string_view path, std::string& out) const {
  const FileNode* n = find(path);
  if (!n) return FsError::kNotFound;
  if (n->conflict) return FsError::kConflict;
  out = n->content;
  return FsError::kOk;
}

FsError FsImage::store(std::string_view path, FileNode node) {
  std::string key(path);
  auto it = files_.find(key);
  size_t old = it == files_.end() ? 0 : node_size(key, it->second);
  size_t next = size_ - old + node_size(key, node);
  if (next > capacity_) return FsError::kFull;
  size_ = next;
  files_[key] = std::move(node);
  return FsError::kOk;
}

FsError FsImage::write(std::string_view path, std::string_view content, uint32_t writer) {
  auto it = files_.find(std::string(path));
  FileNode n;
  if (it != files_.end()) {
    if (it->second.kind == FileKind::kAppend) return FsError::kWrongKind;
    n.version = it->second.version;
  }
  n.kind = FileKind::kRegular;
  n.content = std::string(content);
  n.version = bump(n.version, writer);
  return store(path, std::move(n));
}

FsError FsImage::append(std::string_view path, std::string_view bytes, uint32_t writer) {
  auto it = files_.find(std::string(path));
  FileNode n;
  if (it != files_.end() && it->second.kind != FileKind::kTombstone) {
    if (it->second.kind != FileKind::kAppend) return FsError::kWrongKind;
    if (it->second.conflict) return FsError::kConflict;
    n = it->second;
  } else if (it != files_.end()) {
    n.version = it->second.version;
  }
  n.kind = FileKind::kAppend;
  n.content.append(bytes);
  n.version = bump(n.version, writer);
  return store(path, std::move(n));
}

FsError FsImage::remove(std::string_view path, uint32_t writer) {
  auto it = files_.find(std::string(path));
  if (it == files_.end() || it->second.kind == FileKind::kTombstone) return FsError::kNotFound;
  FileNode n;
  n.kind = FileKind::kTombstone;
  n.version = bump(it->second.version, writer);
  return store(path, std::move(n));
}

FsError FsImage::seal(std::string_view path, uint32_t writer) {
  auto it = files_.find(std::string(path));
  if (it == files_.end() || it->second.kind != FileKind::kAppend) return FsError::kNotFound;
  if (it->second.sealed) return FsError::kOk;
  FileNode n = it->second;
  n.sealed = true;
  n.version = bump(n.version, writer);
  return store(path, std::move(n));
}

std::vector<std::string> FsImage::list(std::string_view prefix) const {
  std::vector<std::string> out;
  for (auto& [p, n] : files_)
    if (n.kind != FileKind::kTombstone && p.starts_with(prefix)) out.push_back(p);
  return out;
}

std::string FsImage::serialize() const {
  std::string out;
  out.reserve(size_);
  put32(out, kMagic);
  put32(out, uint32_t(size_));
  put32(out, uint32_t(files_.size()));
  for (auto& [p, n] : files_) {
    put32(out, uint32_t(p.size()));
    out += p;
    out.push_back(char(n.kind));
    out.push_back(char((n.conflict ? 1 : 0) | (n.sealed ? 2 : 0)));
    put32(out, n.version.counter);
    put32(out, n.version.writer);
    put32(out, uint32_t(n.content.size()));
    out += n.content;
  }
  return out;
}

FsImage FsImage::parse(std::string_view bytes, uint32_t capacity) {
  FsImage fs(capacity);
  Reader r{bytes};
  if (r.u32() != kMagic) throw FsFormatError("bad file system magic");
  uint32_t total = r.u32();
  uint32_t count = r.u32();
  if (total > bytes.size()) throw FsFormatError("truncated file system image");
  r.in = bytes.substr(0, total);
  std::string prev;
  for (uint32_t i = 0; i < count; ++i) {
    std::string path = r.bytes(r.u32());
    if (i > 0 && path <= prev) throw FsFormatError("file system paths out of order");
    FileNode n;
    uint8_t kind = r.u8();
    if (kind > 2) throw FsFormatError("bad file kind");
    n.kind = FileKind(kind);
    uint8_t flags = r.u8();
    n.conflict = flags & 1;
    n.sealed = flags & 2;
    n.version.counter = r.u32();
    n.version.writer = r.u32();
    n.content = r.bytes(r.u32());
    fs.size_ += node_size(path, n);
    prev = path;
    fs.files_.emplace(std::move(path), std::move(n));
  }
  if (fs.size_ != total) throw FsFormatError("file system size mismatch");
  return fs;
}

FsImage reconcile(FsImage& parent, const FsImage& child, const FsImage& base,
                  ReconcileReport* report) {
  static const FileNode kAbsent{FileKind::kTombstone, {}, {}, false, false};
  FsImage next(child.capacity());
  std::map<std::string, FileNode> pnew, cnew;

  std::vector<std::string> paths;
  for (const FsImage* img : {static_cast<const FsImage*>(&parent), &child, &base})
    for (auto& [p, n] : img->files()) paths.push_back(p);
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());

  auto get = [](const FsImage& img, const std::string& p) -> const FileNode& {
    auto it = img.files().find(p);
    return it == img.files().end() ? kAbsent : it->second;
  };

  for (const std::string& path : paths) {
    const FileNode& p = get(parent, path);
    const FileNode& c = get(child, path);
    const FileNode& b = get(base, path);
    bool pchg = p.version != b.version;
    bool cchg = c.version != b.version;
    FileNode np = p, nc;
    if (!cchg || p.version == c.version ||
        (p.kind == FileKind::kTombstone && c.kind == FileKind::kTombstone)) {
      nc = p;
    } else if (!pchg) {
      np = c;
      nc = c;
      if (report) report->from_child.push_back(path);
    } else if (p.kind == FileKind::kAppend && c.kind == FileKind::kAppend &&
               !p.conflict && !c.conflict) {
      size_t bl = b.kind == FileKind::kAppend ? b.content.size() : 0;
      bl = std::min({bl, p.content.size(), c.content.size()});
      np.content = p.content + c.content.substr(bl);
      nc = c;
      nc.content = c.content + p.content.substr(bl);
      np.version = nc.version = joined(p.version, c.version);
      np.sealed = nc.sealed = p.sealed || c.sealed;
      if (report) report->appended.push_back(path);
    } else {
      if (!p.conflict && report) report->conflicts.push_back(path);
      np.conflict = true;
      np.sealed = p.sealed || c.sealed;
      np.version = joined(p.version, c.version);
      nc = np;
    }
    if (np.kind != FileKind::kTombstone || np.version != FileVersion{}) pnew[path] = std::move(np);
    if (nc.kind != FileKind::kTombstone || nc.version != FileVersion{}) cnew[path] = std::move(nc);
  }

  FsImage merged(parent.capacity());
  for (auto& [path, n] : pnew)
    if (merged.store(path, std::move(n)) != FsError::kOk)
      throw FsFormatError("file system region full during reconciliation");
  for (auto& [path, n] : cnew)
    if (next.store(path, std::move(n)) != FsError::kOk)
      throw FsFormatError("child file system region full during reconciliation");
  parent = std::move(merged);
  return next;
}

FsImage load_fs(const Guest& g, uint32_t addr, uint32_t capacity) {
  uint8_t head[kHeader];
  g.read(addr, head);
  uint32_t magic = uint32_t(head[0]) | uint32_t(head[1]) << 8 | uint32_t(head[2]) << 16 |
                   uint32_t(head[3]) << 24;
  if (magic == 0) return FsImage(capacity);
  uint32_t total = uint32_t(head[4]) | uint32_t(head[5]) << 8 | uint32_t(head[6]) << 16 |
                   uint32_t(head[7]) << 24;
  if (total < kHeader || total > capacity) throw FsFormatError("bad file system region");
  return FsImage::parse(g.read_string(addr, total), capacity);
}

void store_fs(Guest& g, uint32_t addr, const FsImage& fs) {
  if (fs.serialized_size() > fs.capacity()) throw FsFormatError("file system region full");
  g.write_string(addr, fs.serialize());
}

}  // namespace detspace
