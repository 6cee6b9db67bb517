#include "bpr/index.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <sstream>

#include "bpr/envelope.hpp"
#include "bpr/errors.hpp"
#include "bpr/hashing.hpp"
#include "bpr/parallel.hpp"

namespace bpr {
namespace {

void check_query(const CorpusIndex& index, const BinaryCode& query, std::size_t l) {
  if (query.dims() != index.dims()) {
    std::ostringstream msg;
    msg << "query has " << query.dims() << " dims, index has " << index.dims();
    throw ValidationError(msg.str());
  }
  if (l < 1 || l > index.size()) {
    std::ostringstream msg;
    msg << "l=" << l << " out of range [1, " << index.size() << "]";
    throw ValidationError(msg.str());
  }
}

std::uint64_t binomial(unsigned n, unsigned k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Next larger integer with the same popcount (Gosper's hack).
std::uint64_t next_combination(std::uint64_t x) noexcept {
  const std::uint64_t c = x & (~x + 1);
  const std::uint64_t r = x + c;
  return (((r ^ x) >> 2) / c) | r;
}

std::uint64_t index_payload_bytes(const EnvelopeHeader& h) {
  const std::uint64_t words = words_for_dims(h.dims);
  if (h.count != 0 && words > UINT64_MAX / 8 / h.count) return UINT64_MAX;
  return h.count * words * 8;
}

}  // namespace

CorpusIndex::CorpusIndex(std::size_t dims, std::size_t count, std::vector<std::uint64_t> storage)
    : dims_(dims), count_(count), words_(words_for_dims(dims)), storage_(std::move(storage)) {
  if (dims == 0 || count == 0) throw ValidationError("index needs at least one code of at least one dim");
  if (count > std::numeric_limits<PassageId>::max()) throw ValidationError("index too large for 32-bit ids");
  if (storage_.size() != count * words_) throw ValidationError("index storage size does not match count * words");
  const std::size_t tail = dims % kWordBits;
  if (tail != 0) {
    for (std::size_t i = 0; i < count; ++i) {
      if ((storage_[i * words_ + words_ - 1] >> tail) != 0) {
        throw ValidationError("index row " + std::to_string(i) + " has non-zero padding bits");
      }
    }
  }
}

BinaryCode CorpusIndex::code(PassageId id) const {
  auto r = row(id);
  return BinaryCode(dims_, std::vector<std::uint64_t>(r.begin(), r.end()));
}

CorpusIndex build_index(std::span<const BinaryCode> codes) {
  if (codes.empty()) throw ValidationError("build_index: empty code list");
  const std::size_t dims = codes.front().dims();
  const std::size_t words = words_for_dims(dims);
  std::vector<std::uint64_t> storage;
  storage.reserve(codes.size() * words);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].dims() != dims) {
      std::ostringstream msg;
      msg << "build_index: code " << i << " has " << codes[i].dims() << " dims, expected " << dims;
      throw ValidationError(msg.str());
    }
    auto w = codes[i].words();
    storage.insert(storage.end(), w.begin(), w.end());
  }
  return CorpusIndex(dims, codes.size(), std::move(storage));
}

std::vector<SearchResult> select_nearest(std::span<const PassageId> ids,
                                         std::span<const std::uint32_t> distances, std::size_t l,
                                         std::size_t dims) {
  l = std::min(l, ids.size());
  if (l == 0) return {};
  std::vector<std::size_t> hist(dims + 1, 0);
  for (std::uint32_t d : distances) ++hist[d];

  // Threshold distance t: everything closer is taken, ties at t by id.
  std::size_t below = 0;
  std::size_t t = 0;
  while (below + hist[t] < l) below += hist[t++];
  const std::size_t take_at_t = l - below;

  std::vector<std::size_t> offset(t + 2, 0);
  for (std::size_t d = 0; d < t; ++d) offset[d + 1] = offset[d] + hist[d];
  offset[t + 1] = offset[t] + take_at_t;

  std::vector<SearchResult> out(l);
  std::size_t taken_at_t = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::uint32_t d = distances[i];
    if (d < t || (d == t && taken_at_t++ < take_at_t)) {
      out[offset[d]++] = SearchResult{ids[i], d, std::nullopt};
    }
  }
  return out;
}

std::vector<SearchResult> linear_scan(const CorpusIndex& index, const BinaryCode& query, std::size_t l,
                                      const ScanOptions& options) {
  check_query(index, query, l);
  const std::size_t n = index.size();
  std::vector<std::uint32_t> dist(n);
  const auto q = query.words();
  parallel_for_shards(n, options.shards, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) dist[i] = hamming_words(q, index.row(static_cast<PassageId>(i)));
  });
  std::vector<PassageId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<PassageId>(i);
  return select_nearest(ids, dist, l, index.dims());
}

std::span<const PassageId> HashTable::bucket(std::uint32_t key) const noexcept {
  auto it = slot_.find(key);
  if (it == slot_.end()) return {};
  const std::uint32_t s = it->second;
  return std::span<const PassageId>(ids_).subspan(offsets_[s], offsets_[s + 1] - offsets_[s]);
}

std::size_t HashTable::max_bucket_size() const noexcept {
  std::size_t best = 0;
  for (std::size_t s = 0; s + 1 < offsets_.size(); ++s) best = std::max<std::size_t>(best, offsets_[s + 1] - offsets_[s]);
  return best;
}

std::size_t HashTable::memory_bytes() const noexcept {
  return ids_.size() * sizeof(PassageId) + keys_.size() * sizeof(std::uint32_t) +
         offsets_.size() * sizeof(std::uint32_t);
}

HashTable build_hash_table(const CorpusIndex& index, unsigned bits) {
  const std::size_t max_bits = std::min<std::size_t>(index.dims(), kMaxHashBits);
  if (bits < 1 || bits > max_bits) {
    std::ostringstream msg;
    msg << "hash_bits " << bits << " out of range [1, " << max_bits << "]";
    throw ValidationError(msg.str());
  }
  HashTable table;
  table.bits_ = bits;
  const std::size_t n = index.size();
  std::vector<std::pair<std::uint32_t, PassageId>> entries(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<PassageId>(i);
    entries[i] = {table.key_of(index.row(id)), id};
  }
  std::sort(entries.begin(), entries.end());

  table.ids_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || entries[i].first != entries[i - 1].first) {
      table.slot_.emplace(entries[i].first, static_cast<std::uint32_t>(table.keys_.size()));
      table.keys_.push_back(entries[i].first);
      table.offsets_.push_back(static_cast<std::uint32_t>(i));
    }
    table.ids_.push_back(entries[i].second);
  }
  table.offsets_.push_back(static_cast<std::uint32_t>(n));
  return table;
}

std::vector<SearchResult> hash_lookup(const CorpusIndex& index, const HashTable& table,
                                      const BinaryCode& query, std::size_t l, LookupStats* stats) {
  check_query(index, query, l);
  if (table.corpus_size() != index.size()) throw ValidationError("hash table was not built from this index");

  const unsigned b = table.bits();
  const std::uint32_t qkey = table.key_of(query.words());
  std::vector<PassageId> pool;
  unsigned radius = 0;
  for (;; ++radius) {
    if (binomial(b, radius) <= table.bucket_count()) {
      // Probe each key at exactly this radius.
      const std::uint64_t limit = std::uint64_t{1} << b;
      for (std::uint64_t mask = (std::uint64_t{1} << radius) - 1; mask < limit;) {
        auto members = table.bucket(qkey ^ static_cast<std::uint32_t>(mask));
        pool.insert(pool.end(), members.begin(), members.end());
        if (mask == 0) break;
        mask = next_combination(mask);
      }
    } else {
      // Fewer occupied buckets than keys in the shell: filter the occupied ones.
      for (std::uint32_t key : table.keys()) {
        if (static_cast<unsigned>(std::popcount(key ^ qkey)) == radius) {
          auto members = table.bucket(key);
          pool.insert(pool.end(), members.begin(), members.end());
        }
      }
    }
    if (pool.size() >= l || radius >= b) break;
  }

  std::sort(pool.begin(), pool.end());
  std::vector<std::uint32_t> dist(pool.size());
  const auto q = query.words();
  for (std::size_t i = 0; i < pool.size(); ++i) dist[i] = hamming_words(q, index.row(pool[i]));
  if (stats != nullptr) *stats = LookupStats{radius, pool.size()};
  return select_nearest(pool, dist, l, index.dims());
}

std::uint64_t index_file_bytes(std::size_t count, std::size_t dims) noexcept {
  return kEnvelopeHeaderBytes + static_cast<std::uint64_t>(count) * words_for_dims(dims) * 8 + kEnvelopeTrailerBytes;
}

void save_index(const CorpusIndex& index, const std::filesystem::path& path) {
  std::vector<std::byte> payload;
  payload.reserve(index.payload_bytes());
  for (std::uint64_t w : index.storage()) put_u64(payload, w);
  EnvelopeHeader header;
  header.magic = make_magic(kIndexMagic);
  header.version = kIndexVersion;
  header.dims = static_cast<std::uint32_t>(index.dims());
  header.count = index.size();
  write_envelope(path, header, payload);
}

CorpusIndex load_index(const std::filesystem::path& path) {
  Envelope env = read_envelope(path, kIndexMagic, kIndexVersion, &index_payload_bytes);
  if (env.header.dims == 0 || env.header.count == 0) {
    throw FormatError(FormatError::Kind::invalid_payload, path.string() + ": empty index");
  }
  std::vector<std::uint64_t> storage(env.payload.size() / 8);
  std::span<const std::byte> bytes(env.payload);
  for (std::size_t i = 0; i < storage.size(); ++i) storage[i] = get_u64(bytes.subspan(i * 8));
  try {
    return CorpusIndex(env.header.dims, env.header.count, std::move(storage));
  } catch (const ValidationError& e) {
    throw FormatError(FormatError::Kind::invalid_payload, path.string() + ": " + e.what());
  }
}

}  // namespace bpr
