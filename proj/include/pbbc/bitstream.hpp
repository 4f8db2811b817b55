#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pbbc/model.hpp"

namespace pbbc {

/// MSB-first bit writer.
class BitWriter {
 public:
  void write(std::uint64_t value, int bits) {
    while (bits > 0) {
      const unsigned used = length_ & 7u;
      if (used == 0) bytes_.push_back(0);
      const int room = 8 - static_cast<int>(used);
      const int take = bits < room ? bits : room;
      const auto chunk = static_cast<unsigned>((value >> (bits - take)) & ((1u << take) - 1u));
      bytes_.back() |= static_cast<std::uint8_t>(chunk << (room - take));
      bits -= take;
      length_ += static_cast<std::uint64_t>(take);
    }
  }

  void put_bit(unsigned bit) {
    if ((length_ & 7u) == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (length_ & 7u));
    ++length_;
  }

  std::uint64_t bit_length() const noexcept { return length_; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t length_ = 0;
};

/// MSB-first bit reader; reading past `bit_limit` throws TruncatedPayload.
class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> bytes, std::uint64_t bit_limit)
      : bytes_(bytes), limit_(std::min<std::uint64_t>(bit_limit, bytes.size() * 8ull)) {}

  explicit BitReader(std::span<const std::uint8_t> bytes) : BitReader(bytes, bytes.size() * 8ull) {}

  std::uint64_t read(int bits) {
    if (position_ + static_cast<std::uint64_t>(bits) > limit_)
      throw Error(ErrorCode::TruncatedPayload, "bit stream ended early");
    std::uint64_t value = 0;
    while (bits > 0) {
      const unsigned used = position_ & 7u;
      const int room = 8 - static_cast<int>(used);
      const int take = bits < room ? bits : room;
      const unsigned byte = bytes_[position_ >> 3];
      const unsigned chunk = (byte >> (room - take)) & ((1u << take) - 1u);
      value = (value << take) | chunk;
      bits -= take;
      position_ += static_cast<std::uint64_t>(take);
    }
    return value;
  }

  unsigned get_bit() {
    if (position_ >= limit_) throw Error(ErrorCode::TruncatedPayload, "bit stream ended early");
    return get_bit_unchecked();
  }

  std::uint64_t position() const noexcept { return position_; }
  std::uint64_t remaining() const noexcept { return limit_ - position_; }

 private:
  unsigned get_bit_unchecked() {
    const unsigned bit = (bytes_[position_ >> 3] >> (7u - (position_ & 7u))) & 1u;
    ++position_;
    return bit;
  }

  std::span<const std::uint8_t> bytes_;
  std::uint64_t limit_;
  std::uint64_t position_ = 0;
};

}  // namespace pbbc
