#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace cw {

// Little-endian binary encoding helpers for the cache and model containers.
// Values are assembled byte by byte so the on-disk layout does not depend on
// host endianness.

inline void put_u8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

inline void put_bytes(std::string& out, std::string_view bytes) {
  out.append(bytes.data(), bytes.size());
}

// Sequential reader over an in-memory buffer. Short reads throw with the
// error kind of the owning container (cache corruption vs model format).
class ByteReader {
 public:
  ByteReader(std::string_view buffer, ErrorKind truncation_kind)
      : buffer_(buffer), kind_(truncation_kind) {}

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return buffer_.size() - pos_; }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    std::string_view b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::string_view b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string_view take(std::size_t n) {
    if (remaining() < n) raise(kind_, "unexpected end of data at offset " + std::to_string(pos_));
    std::string_view out = buffer_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::string_view buffer_;
  ErrorKind kind_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes);

std::string read_binary_file(const std::filesystem::path& path, ErrorKind missing_kind);
void write_binary_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace cw
