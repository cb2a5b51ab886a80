#pragma once

// Little-endian container helpers shared by the dataset and model formats.
//
// Container layout (all integers little-endian):
//   offset 0   8 bytes  magic
//   offset 8   u32      format version
//   offset 12  u64      payload length in bytes
//   offset 20  u32      CRC-32 (zlib polynomial) of the payload
//   offset 24  payload

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rishp::binio {

using Magic = std::array<char, 8>;

inline constexpr std::size_t kHeaderSize = 24;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void i8(std::int8_t v) { buf_.push_back(static_cast<std::uint8_t>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t>& bytes() noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; overruns throw TruncationError.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
  std::uint32_t u32();
  std::uint64_t u64();
  double f64() { return std::bit_cast<double>(u64()); }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> data);

/// Header + payload.
std::vector<std::uint8_t> wrap(const Magic& magic, std::uint32_t version,
                               std::span<const std::uint8_t> payload);

/// Validates header, version and checksum; returns a view of the payload.
/// Version is checked before the payload is touched.
std::span<const std::uint8_t> unwrap(const Magic& magic, std::uint32_t max_version,
                                     std::span<const std::uint8_t> file, const char* what);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace rishp::binio
