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
#include <memory>
#include <string>
#include <string_view>

namespace detspace {

// Incremental SHA-256 (OpenSSL); hex() is lowercase.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  Sha256& update(const void* data, size_t len);
  Sha256& update_u32(uint32_t v);
  std::string hex();

 private:
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

std::string sha256_hex(std::string_view bytes);

// MD5 used by the search workloads (RFC 1321).
using Md5Digest = std::array<uint8_t, 16>;
Md5Digest md5(std::string_view bytes);
std::string to_hex(const uint8_t* data, size_t len);
inline std::string to_hex(const Md5Digest& d) { return to_hex(d.data(), d.size()); }

}  // namespace detspace
