#pragma once

// Hash layer codec: sign / scaled-tanh, the beta annealing schedule, and the
// three similarity kernels used by retrieval (Hamming, binary inner product,
// float-by-binary inner product).

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "bpr/core.hpp"

namespace bpr {

// beta(step) = sqrt(gamma * step + 1); step counts finished optimizer steps.
struct BetaSchedule {
  double gamma = 0.1;

  double beta_at(std::uint64_t step) const noexcept;
};

inline double beta_at(const BetaSchedule& schedule, std::uint64_t step) noexcept {
  return schedule.beta_at(step);
}

// h_i = +1 if e_i > 0 else -1. Zero maps to -1. Throws on NaN.
BinaryCode sign_hash(std::span<const double> embedding);

// tanh(beta * e_i). Throws ValidationError unless beta > 0.
std::vector<double> scaled_tanh(std::span<const double> embedding, double beta);

// Word-level kernels. Callers guarantee equal lengths.
inline std::uint32_t hamming_words(std::span<const std::uint64_t> a,
                                   std::span<const std::uint64_t> b) noexcept {
  std::uint32_t dist = 0;
  for (std::size_t w = 0; w < a.size(); ++w) dist += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
  return dist;
}

// Sum of e_i over the set bits of `words`, accumulated in ascending bit order.
double masked_sum(std::span<const double> embedding, std::span<const std::uint64_t> words) noexcept;

// <e, h> = 2 * masked_sum(e, h) - sum(e). `total` is sum(e), precomputed once per query.
inline double asymmetric_inner_product_words(std::span<const double> embedding, double total,
                                             std::span<const std::uint64_t> words) noexcept {
  return 2.0 * masked_sum(embedding, words) - total;
}

// Sum of components in index order; the `total` argument above.
double component_sum(std::span<const double> embedding) noexcept;

std::uint32_t hamming_distance(const BinaryCode& a, const BinaryCode& b);

// <a, b> over the +/-1 encodings, equal to dims - 2 * hamming_distance(a, b).
std::int64_t binary_inner_product(const BinaryCode& a, const BinaryCode& b);

double asymmetric_inner_product(std::span<const double> embedding, const BinaryCode& code);

}  // namespace bpr
