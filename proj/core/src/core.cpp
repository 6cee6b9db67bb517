#include "bpr/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "bpr/envelope.hpp"
#include "bpr/errors.hpp"

namespace bpr {

BinaryCode::BinaryCode(std::size_t dims) : dims_(dims), words_(words_for_dims(dims), 0) {
  if (dims == 0) throw ValidationError("binary code must have at least one dimension");
}

BinaryCode::BinaryCode(std::size_t dims, std::vector<std::uint64_t> words)
    : dims_(dims), words_(std::move(words)) {
  if (dims == 0) throw ValidationError("binary code must have at least one dimension");
  if (words_.size() != words_for_dims(dims)) {
    std::ostringstream msg;
    msg << "binary code with " << dims << " dims needs " << words_for_dims(dims)
        << " words, got " << words_.size();
    throw ValidationError(msg.str());
  }
  const std::size_t tail = dims % kWordBits;
  if (tail != 0 && (words_.back() >> tail) != 0) {
    throw ValidationError("binary code has non-zero padding bits");
  }
}

BinaryCode BinaryCode::from_signs(std::span<const int> signs) {
  BinaryCode code(signs.size());
  for (std::size_t i = 0; i < signs.size(); ++i) {
    if (signs[i] == 1) {
      code.set(i, true);
    } else if (signs[i] != -1) {
      std::ostringstream msg;
      msg << "code element " << i << " is " << signs[i] << ", expected -1 or +1";
      throw ValidationError(msg.str());
    }
  }
  return code;
}

void BinaryCode::set(std::size_t i, bool positive) noexcept {
  const std::uint64_t mask = std::uint64_t{1} << (i % kWordBits);
  if (positive) {
    words_[i / kWordBits] |= mask;
  } else {
    words_[i / kWordBits] &= ~mask;
  }
}

std::vector<int> BinaryCode::to_signs() const {
  std::vector<int> out(dims_);
  for (std::size_t i = 0; i < dims_; ++i) out[i] = sign(i);
  return out;
}

DenseVector::DenseVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("dense vector must have at least one dimension");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      std::ostringstream msg;
      msg << "dense vector component " << i << " is not finite";
      throw ValidationError(msg.str());
    }
  }
}

void check_instance(const TrainingInstance& instance) {
  const std::size_t dims = instance.question.dims();
  if (instance.positive.dims() != dims) {
    throw ValidationError("training instance: positive dims differ from question dims");
  }
  for (const auto& neg : instance.negatives) {
    if (neg.dims() != dims) {
      throw ValidationError("training instance: negative dims differ from question dims");
    }
  }
}

EngineConfig validate_config(const EngineConfig& cfg) {
  if (cfg.dims < 1) throw ConfigError("dims", "dims must be positive");
  if (cfg.candidates < 1) throw ConfigError("candidates", "candidates l must be at least 1");
  if (cfg.top_k < 1) throw ConfigError("top_k", "top_k k must be at least 1");
  if (cfg.top_k > cfg.candidates) throw ConfigError("top_k", "k exceeds l");
  const std::size_t max_bits = std::min<std::size_t>(cfg.dims, kMaxHashBits);
  if (cfg.hash_bits < 1 || cfg.hash_bits > max_bits) {
    throw ConfigError("hash_bits", "hash_bits out of range [1, min(dims, 30)]");
  }
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) throw ConfigError("gamma", "gamma must be positive");
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) throw ConfigError("alpha", "alpha must be non-negative");
  return cfg;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  // splitmix64 finalizer over seed xor FNV-1a(label).
  std::uint64_t z = seed ^ fnv1a64(std::as_bytes(std::span(label.data(), label.size())));
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::size_t default_thread_count() {
  std::size_t n = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BPR_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap > 0) n = std::min<std::size_t>(n, cap);
  }
  return n;
}

}  // namespace bpr
