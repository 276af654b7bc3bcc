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

#include "detspace/io_log.h"

#include <fstream>
#include <iterator>

namespace detspace {

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char(uint8_t(v >> (8 * i))));
}

uint32_t get_u32(std::string_view s, size_t at) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(s[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string RecordLog::collect(uint32_t device) const {
  std::string out;
  for (const Record& r : records_)
    if (r.device == device) out += r.bytes;
  return out;
}

std::string RecordLog::encode() const {
  std::string out;
  for (const Record& r : records_) {
    put_u32(out, r.device);
    put_u32(out, uint32_t(r.bytes.size()));
    out += r.bytes;
  }
  return out;
}

RecordLog RecordLog::decode(std::string_view bytes) {
  RecordLog log;
  size_t at = 0;
  while (at < bytes.size()) {
    if (bytes.size() - at < 8)
      throw LogFormatError("truncated record header at offset " + std::to_string(at));
    uint32_t device = get_u32(bytes, at);
    uint32_t len = get_u32(bytes, at + 4);
    at += 8;
    if (bytes.size() - at < len)
      throw LogFormatError("truncated record body at offset " + std::to_string(at));
    log.add(device, bytes.substr(at, len));
    at += len;
  }
  return log;
}

void RecordLog::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::string data = encode();
  f.write(data.data(), std::streamsize(data.size()));
}

RecordLog RecordLog::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode(data);
}

}  // namespace detspace
