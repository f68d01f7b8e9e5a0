#pragma once

// Little-endian byte buffer helpers shared by the feature and model containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metafuse/error.hpp"

namespace metafuse::binary {

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

  void string(std::string_view s) {
    uint(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }

  std::size_t size() const noexcept { return buf_.size(); }
  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, std::string context) : data_(data), context_(std::move(context)) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) {
      throw TruncatedError(context_ + ": truncated (needed " + std::to_string(n) + " bytes at offset " +
                           std::to_string(pos_) + ", " + std::to_string(remaining()) + " left)");
    }
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  template <typename U>
  U uint() {
    const auto b = take(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

  std::string string() {
    const auto n = uint<std::uint32_t>();
    const auto b = take(n);
    return {reinterpret_cast<const char*>(b.data()), b.size()};
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  const std::string& context() const noexcept { return context_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace metafuse::binary
