// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace latte::io {

// Failure categories for the binary container formats. Loaders throw before
// returning any partially decoded data.
enum class ErrorKind {
  BadMagic,
  BadVersion,
  BadChecksum,
  Truncated,
  Malformed,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

uint32_t crc32(const void* data, size_t len);

// Little-endian append-only buffer.
class ByteWriter {
public:
  void u8(uint8_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void i64(int64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(const void* data, size_t len);
  void str(const std::string& s);  // u32 length + raw bytes

  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

private:
  std::string buf_;
};

// Little-endian cursor over an in-memory buffer; throws Truncated on overrun.
class ByteReader {
public:
  ByteReader(const void* data, size_t len)
      : data_(static_cast<const uint8_t*>(data)), len_(len) {}
  explicit ByteReader(const std::string& buf) : ByteReader(buf.data(), buf.size()) {}

  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  int64_t i64();
  float f32();
  double f64();
  void bytes(void* out, size_t len);
  std::string str();

  size_t pos() const { return pos_; }
  size_t remaining() const { return len_ - pos_; }
  bool eof() const { return pos_ == len_; }

private:
  void need(size_t n);
  const uint8_t* data_;
  size_t len_;
  size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
bool file_exists(const std::string& path);

}  // namespace latte::io
