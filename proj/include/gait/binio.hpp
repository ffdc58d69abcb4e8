#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "gait/errors.hpp"

// Little-endian binary readers/writers shared by the segment, model and
// quantized-model file formats. The reader tracks its byte offset so
// truncation and corruption errors can name the exact position.

namespace gait::binio {

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void u8(uint8_t v) { raw(&v, 1); }
  void u16(uint16_t v) {
    uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
    raw(b, 2);
  }
  void u32(uint32_t v) {
    uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    raw(b, 4);
  }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void u64(uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    raw(b, 8);
  }
  void f32(float v) {
    uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    uint64_t bits = 0;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void magic(const char m[4]) { raw(m, 4); }
  void raw(const void* p, size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    offset_ += n;
  }
  size_t offset() const { return offset_; }

 private:
  std::ostream& os_;
  size_t offset_ = 0;
};

class Reader {
 public:
  // `model_file` selects which error type is thrown (data vs model exit code).
  Reader(std::istream& is, std::string context, bool model_file = false)
      : is_(is), context_(std::move(context)), model_file_(model_file) {}

  uint8_t u8() {
    uint8_t v = 0;
    raw(&v, 1);
    return v;
  }
  uint16_t u16() {
    uint8_t b[2];
    raw(b, 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint32_t u32() {
    uint8_t b[4];
    raw(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  uint64_t u64() {
    uint8_t b[8];
    raw(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  float f32() {
    const uint32_t bits = u32();
    float v = 0;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v = 0;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void expect_magic(const char m[4]) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, m, 4) != 0) {
      fail("bad magic (expected '" + std::string(m, 4) + "') at offset 0");
    }
  }
  void raw(void* p, size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is_.gcount()) != n) {
      fail("truncated at offset " + std::to_string(offset_ + static_cast<size_t>(is_.gcount())));
    }
    offset_ += n;
  }
  // True when the stream has no further bytes.
  bool at_eof() {
    return is_.peek() == std::char_traits<char>::eof();
  }
  size_t offset() const { return offset_; }

  [[noreturn]] void fail(const std::string& what) const {
    const std::string msg = context_ + ": " + what;
    if (model_file_) throw ModelFormatError(msg);
    throw FormatError(msg);
  }

 private:
  std::istream& is_;
  std::string context_;
  bool model_file_;
  size_t offset_ = 0;
};

}  // namespace gait::binio
