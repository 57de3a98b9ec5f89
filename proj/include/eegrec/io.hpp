// include/eegrec/io.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "eegrec/errors.hpp"

namespace eegrec {

// All binary artifacts share the same framing: a 4-byte magic, a u32 format
// version, then format-specific payload. Everything is little-endian.
class BinWriter {
 public:
  explicit BinWriter(const std::filesystem::path& path)
      : path_(path.string()), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open for writing: " + path_);
  }

  void magic(const char tag[4], uint32_t version) {
    out_.write(tag, 4);
    u32(version);
  }

  void u32(uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 4);
  }

  void u64(uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 8);
  }

  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }

  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }

  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }

  void f64_array(const double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(data, n * sizeof(double));
    } else {
      for (std::size_t i = 0; i < n; ++i) f64(data[i]);
    }
  }

  void f32_array(const float* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(data, n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) f32(data[i]);
    }
  }

  void close() {
    out_.close();
    if (!out_) throw DataError("write failed: " + path_);
  }

 private:
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw DataError("write failed: " + path_);
  }

  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::filesystem::path& path)
      : path_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open: " + path_);
  }

  // Checks the 4-byte magic and that the stored version is the expected one.
  void expect_magic(const char tag[4], uint32_t version, const std::string& what) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, tag, 4) != 0)
      throw DataError(path_ + ": not a " + what + " file (bad magic)");
    const uint32_t v = u32();
    if (v != version)
      throw DataError(path_ + ": unsupported " + what + " version " +
                      std::to_string(v) + " (expected " + std::to_string(version) + ")");
  }

  uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }

  uint64_t u64() {
    unsigned char b[8];
    raw(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }

  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string str() {
    const uint64_t n = u64();
    if (n > (1ULL << 32)) throw DataError(path_ + ": implausible string length");
    std::string s(static_cast<std::size_t>(n), '\0');
    raw(s.data(), s.size());
    return s;
  }

  void f64_array(double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(data, n * sizeof(double));
    } else {
      for (std::size_t i = 0; i < n; ++i) data[i] = f64();
    }
  }

  void f32_array(float* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(data, n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) data[i] = f32();
    }
  }

 private:
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw DataError(path_ + ": truncated file");
  }

  std::string path_;
  std::ifstream in_;
};

}  // namespace eegrec
