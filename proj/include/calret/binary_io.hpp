// Copyright 2026 The calret authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace calret {

// Little-endian binary file primitives shared by the CRIX/CREN/CRAD/CREM
// formats. Read errors report the byte offset at which they occurred.

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  }

  ~BinaryWriter() noexcept(false) {
    if (out_.is_open()) {
      out_.flush();
      if (!out_) throw std::runtime_error("write failed for " + path_);
    }
  }

  void write_magic(const char magic[4]) { raw(magic, 4); }

  void write_u8(std::uint8_t v) { raw(reinterpret_cast<const char*>(&v), 1); }

  void write_u32(std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    raw(buf, 4);
  }

  void write_u64(std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    raw(buf, 8);
  }

  void write_f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(bits);
  }

  void write_f32_array(const std::vector<float>& values) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(reinterpret_cast<const char*>(values.data()),
          static_cast<std::streamsize>(values.size() * 4));
    } else {
      for (float v : values) write_f32(v);
    }
  }

  void write_cstring(const std::string& s) {
    if (s.find('\0') != std::string::npos) {
      throw std::invalid_argument("id contains an embedded null byte");
    }
    raw(s.data(), static_cast<std::streamsize>(s.size()));
    const char z = '\0';
    raw(&z, 1);
  }

 private:
  void raw(const char* data, std::streamsize n) {
    out_.write(data, n);
    if (!out_) throw std::runtime_error("write failed for " + path_);
  }

  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open " + path);
  }

  std::uint64_t offset() const { return offset_; }

  void expect_magic(const char magic[4]) {
    char buf[4] = {0, 0, 0, 0};
    in_.read(buf, 4);
    if (in_.gcount() != 4 || std::memcmp(buf, magic, 4) != 0) {
      throw std::runtime_error(path_ + ": bad magic at byte offset 0, expected \"" +
                               std::string(magic, 4) + "\"");
    }
    offset_ += 4;
  }

  std::uint8_t read_u8() {
    char b;
    raw(&b, 1, "u8");
    return static_cast<std::uint8_t>(b);
  }

  std::uint32_t read_u32() {
    char buf[4];
    raw(buf, 4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return v;
  }

  std::uint64_t read_u64() {
    char buf[8];
    raw(buf, 8, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return v;
  }

  float read_f32() {
    const std::uint32_t bits = read_u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::vector<float> read_f32_array(std::size_t n) {
    std::vector<float> values(n);
    if constexpr (std::endian::native == std::endian::little) {
      raw(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(n * 4), "float array");
    } else {
      for (std::size_t i = 0; i < n; ++i) values[i] = read_f32();
    }
    return values;
  }

  std::string read_cstring() {
    std::string s;
    char c;
    for (;;) {
      raw(&c, 1, "string");
      if (c == '\0') return s;
      s.push_back(c);
    }
  }

  /// Throws unless the file ends exactly here.
  void expect_eof() {
    char c;
    in_.read(&c, 1);
    if (!in_.eof()) {
      throw std::runtime_error(path_ + ": trailing data at byte offset " +
                               std::to_string(offset_));
    }
  }

 private:
  void raw(char* data, std::streamsize n, const char* what) {
    in_.read(data, n);
    if (!in_) {
      throw std::runtime_error(path_ + ": truncated file, failed to read " +
                               std::string(what) + " at byte offset " +
                               std::to_string(offset_));
    }
    offset_ += static_cast<std::uint64_t>(n);
  }

  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

}  // namespace calret
