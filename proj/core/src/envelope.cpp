#include "bpr/envelope.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bpr/errors.hpp"

namespace bpr {

std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::array<char, 8> make_magic(std::string_view text) {
  std::array<char, 8> out{};
  std::copy_n(text.begin(), std::min<std::size_t>(text.size(), out.size()), out.begin());
  return out;
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFU));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFU));
}

std::uint32_t get_u32(std::span<const std::byte> in) noexcept {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::span<const std::byte> in) noexcept {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

void write_envelope(const std::filesystem::path& path, const EnvelopeHeader& header,
                    std::span<const std::byte> payload) {
  std::vector<std::byte> head;
  head.reserve(kEnvelopeHeaderBytes);
  for (char c : header.magic) head.push_back(static_cast<std::byte>(c));
  put_u32(head, header.version);
  put_u32(head, header.dims);
  put_u64(head, header.count);
  put_u64(head, 0);  // reserved

  std::vector<std::byte> trailer;
  put_u64(trailer, fnv1a64(payload));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(trailer.data()), static_cast<std::streamsize>(trailer.size()));
  out.flush();
  if (!out) throw FormatError(FormatError::Kind::io, "write failed: " + path.string());
}

Envelope read_envelope(const std::filesystem::path& path, std::string_view magic,
                       std::uint32_t version,
                       std::uint64_t (*payload_bytes)(const EnvelopeHeader&)) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> file(size);
  if (!in.read(reinterpret_cast<char*>(file.data()), static_cast<std::streamsize>(size))) {
    throw FormatError(FormatError::Kind::io, "read failed: " + path.string());
  }

  if (file.size() < kEnvelopeHeaderBytes) {
    throw FormatError(FormatError::Kind::truncated, path.string() + ": truncated header");
  }
  Envelope env;
  std::span<const std::byte> bytes(file);
  for (std::size_t i = 0; i < 8; ++i) env.header.magic[i] = static_cast<char>(bytes[i]);
  if (env.header.magic != make_magic(magic)) {
    throw FormatError(FormatError::Kind::bad_magic,
                      path.string() + ": bad magic, expected " + std::string(magic));
  }
  env.header.version = get_u32(bytes.subspan(8));
  if (env.header.version != version) {
    std::ostringstream msg;
    msg << path.string() << ": unsupported version " << env.header.version << ", expected " << version;
    throw FormatError(FormatError::Kind::bad_version, msg.str());
  }
  env.header.dims = get_u32(bytes.subspan(12));
  env.header.count = get_u64(bytes.subspan(16));

  const std::uint64_t expected = payload_bytes(env.header);
  const std::uint64_t available = file.size() - kEnvelopeHeaderBytes;
  if (available < kEnvelopeTrailerBytes || available - kEnvelopeTrailerBytes < expected) {
    throw FormatError(FormatError::Kind::truncated, path.string() + ": truncated payload");
  }
  if (available - kEnvelopeTrailerBytes > expected) {
    throw FormatError(FormatError::Kind::size_mismatch, path.string() + ": trailing bytes after checksum");
  }
  auto payload = bytes.subspan(kEnvelopeHeaderBytes, expected);
  const std::uint64_t stored = get_u64(bytes.subspan(kEnvelopeHeaderBytes + expected));
  if (fnv1a64(payload) != stored) {
    throw FormatError(FormatError::Kind::checksum, path.string() + ": payload checksum mismatch");
  }
  env.payload.assign(payload.begin(), payload.end());
  return env;
}

}  // namespace bpr
