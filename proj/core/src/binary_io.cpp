#include "binary_io.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

#include "rishp/errors.hpp"

namespace rishp::binio {

void Reader::need(std::size_t n) const {
  if (remaining() < n) throw TruncationError("unexpected end of data");
}

std::uint8_t Reader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
  return v;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < data.size()) {
    const std::size_t chunk = std::min<std::size_t>(data.size() - off, 1U << 30);
    crc = ::crc32(crc, data.data() + off, static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> wrap(const Magic& magic, std::uint32_t version,
                               std::span<const std::uint8_t> payload) {
  Writer w;
  for (char c : magic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(version);
  w.u64(payload.size());
  w.u32(crc32(payload));
  auto& out = w.bytes();
  out.insert(out.end(), payload.begin(), payload.end());
  return std::move(out);
}

std::span<const std::uint8_t> unwrap(const Magic& magic, std::uint32_t max_version,
                                     std::span<const std::uint8_t> file, const char* what) {
  const std::string name(what);
  if (file.size() < kHeaderSize) throw TruncationError(name + ": file shorter than its header");
  if (std::memcmp(file.data(), magic.data(), magic.size()) != 0) {
    throw FormatError(name + ": bad magic bytes");
  }
  Reader r(file.subspan(magic.size()));
  const std::uint32_t version = r.u32();
  if (version == 0 || version > max_version) {
    throw VersionError(name + ": format version " + std::to_string(version) +
                       " is not supported (newest readable is " + std::to_string(max_version) +
                       ")");
  }
  const std::uint64_t length = r.u64();
  const std::uint32_t crc = r.u32();
  if (file.size() - kHeaderSize < length) {
    throw TruncationError(name + ": payload truncated (" +
                          std::to_string(file.size() - kHeaderSize) + " of " +
                          std::to_string(length) + " bytes)");
  }
  if (file.size() - kHeaderSize > length) throw FormatError(name + ": trailing bytes after payload");
  auto payload = file.subspan(kHeaderSize, length);
  if (crc32(payload) != crc) throw ChecksumError(name + ": payload checksum mismatch");
  return payload;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace rishp::binio
