/*
 * Copyright 2026 The copg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COPG_BINIO_HPP_
#define COPG_BINIO_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "copg/errors.hpp"

// Little-endian binary IO helpers for the on-disk formats.
namespace copg::binio {

template <typename T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  // Host is little-endian on all supported targets; memcpy keeps the byte
  // order explicit at the call site.
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw CorruptFile(std::string("unexpected EOF reading ") + what);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

inline void write_magic(std::ostream& os, const char* magic) {
  os.write(magic, static_cast<std::streamsize>(std::strlen(magic)));
}

inline void expect_magic(std::istream& is, const char* magic, const char* what) {
  const std::size_t n = std::strlen(magic);
  std::string got(n, '\0');
  is.read(got.data(), static_cast<std::streamsize>(n));
  if (!is || got != magic) {
    throw CorruptFile(std::string("bad magic for ") + what + " (expected '" + magic + "')");
  }
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_le<uint16_t>(os, static_cast<uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what) {
  const uint16_t n = read_le<uint16_t>(is, what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw CorruptFile(std::string("unexpected EOF reading ") + what);
  return s;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ContractError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ContractError("cannot open for reading: " + path);
  return is;
}

// FNV-1a over a byte stream; used for manifest digests.
uint64_t fnv1a_file(const std::string& path);
uint64_t fnv1a_bytes(const void* data, std::size_t n, uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(uint64_t v);

}  // namespace copg::binio

#endif  // COPG_BINIO_HPP_
