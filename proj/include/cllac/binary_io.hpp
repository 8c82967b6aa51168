#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "cllac/errors.hpp"

namespace cllac::binio {

// Explicit little/big-endian field helpers; byte order never depends on the host.

template <typename T>
void write_le(std::ostream& os, T value) {
  using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>,
      std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>, T>>;
  const U bits = std::bit_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(buf, sizeof(U));
}

/// Tracks the read position so format errors can report byte offsets.
class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  void bytes(char* dst, std::size_t n, const char* what) {
    is_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(is_.gcount());
    if (got != n) throw FormatError(std::string("truncated input while reading ") + what, offset_ + got);
    offset_ += n;
  }

  template <typename T>
  T le(const char* what) {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>,
        std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>, T>>;
    unsigned char buf[sizeof(U)];
    bytes(reinterpret_cast<char*>(buf), sizeof(U), what);
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
  }

  std::uint32_t be_u32(const char* what) {
    unsigned char buf[4];
    bytes(reinterpret_cast<char*>(buf), 4, what);
    return (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
           (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

}  // namespace cllac::binio
