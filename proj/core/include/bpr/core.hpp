#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bpr {

using PassageId = std::uint32_t;

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_dims(std::size_t dims) noexcept {
  return (dims + kWordBits - 1) / kWordBits;
}

/**
 * A d-dimensional code in {-1,+1}^d packed LSB-first into 64-bit words.
 *
 * Bit b of word w holds dimension 64*w + b; a set bit encodes +1, a clear
 * bit encodes -1. Padding bits above `dims()` are always zero, so equality
 * is plain word comparison.
 */
class BinaryCode {
 public:
  BinaryCode() = default;

  // All dimensions -1.
  explicit BinaryCode(std::size_t dims);

  // Takes ownership of packed words. Throws ValidationError on a length
  // mismatch or a set padding bit.
  BinaryCode(std::size_t dims, std::vector<std::uint64_t> words);

  // Packs a sequence of +1/-1 values.
  static BinaryCode from_signs(std::span<const int> signs);

  std::size_t dims() const noexcept { return dims_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  // true for +1.
  bool bit(std::size_t i) const noexcept { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  int sign(std::size_t i) const noexcept { return bit(i) ? 1 : -1; }
  void set(std::size_t i, bool positive) noexcept;

  std::vector<int> to_signs() const;

  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

 private:
  std::size_t dims_ = 0;
  std::vector<std::uint64_t> words_;
};

// new_binary_code: packs +1/-1 values; anything else is a ValidationError.
inline BinaryCode new_binary_code(std::span<const int> signs) { return BinaryCode::from_signs(signs); }

/// A finite d-dimensional float embedding.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::vector<double> values);  // throws on NaN/Inf or empty
  DenseVector(std::initializer_list<double> values) : DenseVector(std::vector<double>(values)) {}

  std::size_t dims() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  operator std::span<const double>() const noexcept { return values_; }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> values_;
};

struct PassageRecord {
  PassageId id = 0;
  std::string payload;
};

struct SearchResult {
  PassageId id = 0;
  std::uint32_t hamming = 0;
  std::optional<double> score;  // absent when reranking is disabled

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

struct TrainingInstance {
  DenseVector question;
  DenseVector positive;
  std::vector<DenseVector> negatives;

  std::size_t input_dims() const noexcept { return question.dims(); }
};

// Throws ValidationError unless every vector in `instance` has one dimensionality.
void check_instance(const TrainingInstance& instance);

struct EngineConfig {
  std::size_t dims = 768;
  std::size_t candidates = 1000;  // l
  std::size_t top_k = 100;        // k
  double gamma = 0.1;
  double alpha = 2.0;
  unsigned hash_bits = 20;
  std::uint64_t seed = 0;
};

inline constexpr unsigned kMaxHashBits = 30;

// Returns `cfg` unchanged or throws ConfigError naming the violated field.
EngineConfig validate_config(const EngineConfig& cfg);

// Sub-seed derivation: mixes a label into the root seed so each consumer
// gets an independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

// Worker count for internal parallelism: hardware concurrency, capped by the
// BPR_THREADS environment variable when set.
std::size_t default_thread_count();

}  // namespace bpr
