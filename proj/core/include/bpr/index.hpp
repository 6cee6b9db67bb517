#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "bpr/core.hpp"

namespace bpr {

/**
 * Immutable packed code storage for N passages. Passage ids are the row
 * numbers [0, N); each row occupies words_per_code() 64-bit words.
 */
class CorpusIndex {
 public:
  CorpusIndex() = default;
  // Validates storage length and padding bits.
  CorpusIndex(std::size_t dims, std::size_t count, std::vector<std::uint64_t> storage);

  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return count_; }
  std::size_t words_per_code() const noexcept { return words_; }

  std::span<const std::uint64_t> row(PassageId id) const noexcept {
    return {storage_.data() + static_cast<std::size_t>(id) * words_, words_};
  }
  BinaryCode code(PassageId id) const;
  std::span<const std::uint64_t> storage() const noexcept { return storage_; }

  // N * ceil(d/64) * 8.
  std::size_t payload_bytes() const noexcept { return storage_.size() * sizeof(std::uint64_t); }

  friend bool operator==(const CorpusIndex&, const CorpusIndex&) = default;

 private:
  std::size_t dims_ = 0;
  std::size_t count_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> storage_;
};

// Throws ValidationError on an empty list or mixed dimensions.
CorpusIndex build_index(std::span<const BinaryCode> codes);

struct ScanOptions {
  std::size_t shards = 1;  // contiguous corpus shards scanned concurrently
};

// The l nearest codes by Hamming distance, ordered by (hamming, id).
std::vector<SearchResult> linear_scan(const CorpusIndex& index, const BinaryCode& query, std::size_t l,
                                      const ScanOptions& options = {});

/**
 * Buckets passages by the first `bits` dimensions of their code (the low
 * bits of word 0). Buckets are stored CSR-style, ids ascending within each.
 */
class HashTable {
 public:
  unsigned bits() const noexcept { return bits_; }
  std::size_t corpus_size() const noexcept { return ids_.size(); }
  std::size_t bucket_count() const noexcept { return keys_.size(); }  // non-empty buckets
  std::span<const std::uint32_t> keys() const noexcept { return keys_; }
  std::span<const PassageId> bucket(std::uint32_t key) const noexcept;
  std::size_t max_bucket_size() const noexcept;

  std::uint32_t key_of(std::span<const std::uint64_t> words) const noexcept {
    return static_cast<std::uint32_t>(words[0] & ((std::uint64_t{1} << bits_) - 1));
  }

  // Bytes for ids, keys and offsets (excludes the hash map overhead).
  std::size_t memory_bytes() const noexcept;

 private:
  friend HashTable build_hash_table(const CorpusIndex& index, unsigned bits);

  unsigned bits_ = 0;
  std::vector<std::uint32_t> keys_;     // sorted
  std::vector<std::uint32_t> offsets_;  // keys_.size() + 1
  std::vector<PassageId> ids_;
  std::unordered_map<std::uint32_t, std::uint32_t> slot_;
};

// Throws ValidationError unless 1 <= bits <= min(dims, 30).
HashTable build_hash_table(const CorpusIndex& index, unsigned bits);

struct LookupStats {
  unsigned radius = 0;        // final prefix radius probed
  std::size_t pool_size = 0;  // ids whose full distance was computed
};

/**
 * Multi-probe lookup: probes every key within prefix Hamming radius r of the
 * query prefix for r = 0, 1, ... until at least l passages are pooled (a
 * radius shell is always probed completely) or every key has been probed,
 * then ranks the pool by full-code distance and returns the top l ordered by
 * (hamming, id).
 */
std::vector<SearchResult> hash_lookup(const CorpusIndex& index, const HashTable& table,
                                      const BinaryCode& query, std::size_t l,
                                      LookupStats* stats = nullptr);

// Ranks (id, distance) pairs; `ids` must be ascending. Shared by both
// candidate generators.
std::vector<SearchResult> select_nearest(std::span<const PassageId> ids,
                                         std::span<const std::uint32_t> distances, std::size_t l,
                                         std::size_t dims);

inline constexpr char kIndexMagic[] = "BPRIDX01";
inline constexpr std::uint32_t kIndexVersion = 1;

// Total on-disk size: 32-byte header + payload + 8-byte checksum.
std::uint64_t index_file_bytes(std::size_t count, std::size_t dims) noexcept;

void save_index(const CorpusIndex& index, const std::filesystem::path& path);
CorpusIndex load_index(const std::filesystem::path& path);

}  // namespace bpr
