#pragma once

// Little-endian binary envelope shared by index and model files:
//
//   offset  size  field
//   0       8     magic (ASCII, e.g. "BPRIDX01")
//   8       4     version (u32)
//   12      4     dims (u32)
//   16      8     count (u64)
//   24      8     reserved (zero)
//   32      n     payload
//   32+n    8     FNV-1a 64 checksum of the payload (u64)

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace bpr {

inline constexpr std::size_t kEnvelopeHeaderBytes = 32;
inline constexpr std::size_t kEnvelopeTrailerBytes = 8;

struct EnvelopeHeader {
  std::array<char, 8> magic{};
  std::uint32_t version = 0;
  std::uint32_t dims = 0;
  std::uint64_t count = 0;
};

std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept;

std::array<char, 8> make_magic(std::string_view text);

// Writes header + payload + checksum. Throws FormatError(io) on failure.
void write_envelope(const std::filesystem::path& path, const EnvelopeHeader& header,
                    std::span<const std::byte> payload);

// Reads and verifies an envelope. `payload_bytes` maps the parsed header to
// the payload size it implies. Throws FormatError with the matching kind.
struct Envelope {
  EnvelopeHeader header;
  std::vector<std::byte> payload;
};
Envelope read_envelope(const std::filesystem::path& path, std::string_view magic,
                       std::uint32_t version,
                       std::uint64_t (*payload_bytes)(const EnvelopeHeader&));

// Little-endian scalar codecs.
void put_u32(std::vector<std::byte>& out, std::uint32_t v);
void put_u64(std::vector<std::byte>& out, std::uint64_t v);
std::uint32_t get_u32(std::span<const std::byte> in) noexcept;
std::uint64_t get_u64(std::span<const std::byte> in) noexcept;

}  // namespace bpr
