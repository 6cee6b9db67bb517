#include "bpr/hashing.hpp"

#include <cmath>
#include <sstream>

#include "bpr/errors.hpp"

namespace bpr {
namespace {

void require_same_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw ValidationError(msg.str());
  }
}

}  // namespace

double BetaSchedule::beta_at(std::uint64_t step) const noexcept {
  return std::sqrt(gamma * static_cast<double>(step) + 1.0);
}

BinaryCode sign_hash(std::span<const double> embedding) {
  BinaryCode code(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    const double v = embedding[i];
    if (std::isnan(v)) {
      std::ostringstream msg;
      msg << "sign_hash: component " << i << " is NaN";
      throw ValidationError(msg.str());
    }
    if (v > 0.0) code.set(i, true);
  }
  return code;
}

std::vector<double> scaled_tanh(std::span<const double> embedding, double beta) {
  if (!(beta > 0.0)) throw ValidationError("scaled_tanh: beta must be positive");
  std::vector<double> out(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) out[i] = std::tanh(beta * embedding[i]);
  return out;
}

double masked_sum(std::span<const double> embedding, std::span<const std::uint64_t> words) noexcept {
  double sum = 0.0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    const double* base = embedding.data() + w * kWordBits;
    while (bits != 0) {
      sum += base[std::countr_zero(bits)];
      bits &= bits - 1;
    }
  }
  return sum;
}

double component_sum(std::span<const double> embedding) noexcept {
  double sum = 0.0;
  for (double v : embedding) sum += v;
  return sum;
}

std::uint32_t hamming_distance(const BinaryCode& a, const BinaryCode& b) {
  require_same_dims(a.dims(), b.dims(), "hamming_distance");
  return hamming_words(a.words(), b.words());
}

std::int64_t binary_inner_product(const BinaryCode& a, const BinaryCode& b) {
  require_same_dims(a.dims(), b.dims(), "binary_inner_product");
  return static_cast<std::int64_t>(a.dims()) - 2 * static_cast<std::int64_t>(hamming_words(a.words(), b.words()));
}

double asymmetric_inner_product(std::span<const double> embedding, const BinaryCode& code) {
  require_same_dims(embedding.size(), code.dims(), "asymmetric_inner_product");
  return asymmetric_inner_product_words(embedding, component_sum(embedding), code.words());
}

}  // namespace bpr
