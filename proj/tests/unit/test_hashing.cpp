#include <doctest.h>

#include <cmath>
#include <random>

#include "bpr/errors.hpp"
#include "bpr/hashing.hpp"
#include "oracles.hpp"

using namespace bpr;

TEST_SUITE("hashing") {
  TEST_CASE("sign_hash maps zero to -1") {
    const std::vector<double> e{0.3, -0.2, 0.0};
    CHECK(sign_hash(e).to_signs() == std::vector<int>{1, -1, -1});
    CHECK(sign_hash(std::vector<double>{5.0, 5.0}).to_signs() == std::vector<int>{1, 1});
  }

  TEST_CASE("sign_hash rejects NaN") {
    CHECK_THROWS_AS(sign_hash(std::vector<double>{1.0, std::nan("")}), ValidationError);
  }

  TEST_CASE("scaled_tanh") {
    CHECK(scaled_tanh(std::vector<double>{0.0}, 10.0)[0] == 0.0);
    CHECK(std::abs(scaled_tanh(std::vector<double>{1.0}, 100.0)[0] - 1.0) < 1e-9);
    // Reference value from an independent math library (mpmath): tanh(0.5).
    CHECK(scaled_tanh(std::vector<double>{0.5}, 1.0)[0] == doctest::Approx(0.46211715726000974).epsilon(1e-14));
    CHECK_THROWS_AS(scaled_tanh(std::vector<double>{1.0}, 0.0), ValidationError);
    CHECK_THROWS_AS(scaled_tanh(std::vector<double>{1.0}, -1.0), ValidationError);
  }

  TEST_CASE("scaled_tanh outputs stay inside (-1, 1) and keep the sign") {
    std::mt19937_64 rng(5);
    for (double beta : {0.5, 1.0, 5.0, 20.0}) {
      const auto e = oracle::random_vector(64, rng);
      const auto h = scaled_tanh(e, beta);
      for (double v : h) CHECK(std::abs(v) <= 1.0);
      CHECK(sign_hash(h) == sign_hash(e));
    }
  }

  TEST_CASE("beta schedule") {
    const BetaSchedule s{0.1};
    CHECK(beta_at(s, 0) == 1.0);
    CHECK(beta_at(s, 990) == 10.0);
    CHECK(beta_at(BetaSchedule{0.025}, 0) == 1.0);
    double prev = 0.0;
    for (std::uint64_t step = 0; step < 5000; step += 7) {
      const double b = s.beta_at(step);
      CHECK(b >= 1.0);
      CHECK(b > prev);
      prev = b;
    }
  }

  TEST_CASE("hamming distance") {
    const auto a = new_binary_code(std::vector<int>{1, -1, 1, -1});
    const auto b = new_binary_code(std::vector<int>{-1, 1, 1, -1});
    CHECK(hamming_distance(a, a) == 0);
    CHECK(hamming_distance(a, b) == 2);
    CHECK_THROWS_AS(hamming_distance(a, BinaryCode(5)), ValidationError);
  }

  TEST_CASE("hamming and inner product agree with per-dimension oracles") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t dims = 1 + rng() % 800;
      const auto sa = oracle::random_signs(dims, rng);
      const auto sb = oracle::random_signs(dims, rng);
      const auto a = new_binary_code(sa);
      const auto b = new_binary_code(sb);
      CHECK(hamming_distance(a, b) == oracle::hamming(sa, sb));
      CHECK(binary_inner_product(a, b) == oracle::dot(sa, sb));
      CHECK(binary_inner_product(a, b) == static_cast<std::int64_t>(dims) - 2 * hamming_distance(a, b));
    }
  }

  TEST_CASE("binary inner product examples") {
    std::mt19937_64 rng(3);
    auto s = oracle::random_signs(768, rng);
    auto t = s;
    for (int i = 0; i < 100; ++i) t[i] = -t[i];
    CHECK(binary_inner_product(new_binary_code(s), new_binary_code(t)) == 568);
    const auto c = new_binary_code(oracle::random_signs(64, rng));
    CHECK(binary_inner_product(c, c) == 64);
    CHECK_THROWS_AS(binary_inner_product(c, BinaryCode(63)), ValidationError);
  }

  TEST_CASE("hamming is a metric") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t dims = 1 + rng() % 256;
      const auto a = new_binary_code(oracle::random_signs(dims, rng));
      const auto b = new_binary_code(oracle::random_signs(dims, rng));
      const auto c = new_binary_code(oracle::random_signs(dims, rng));
      CHECK(hamming_distance(a, b) == hamming_distance(b, a));
      CHECK((hamming_distance(a, b) == 0) == (a == b));
      CHECK(hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c));
    }
  }

  TEST_CASE("asymmetric inner product") {
    const std::vector<double> e{0.5, -1.0, 2.0};
    const auto h = new_binary_code(std::vector<int>{1, -1, -1});
    CHECK(asymmetric_inner_product(e, h) == doctest::Approx(-0.5));
    const auto ones = new_binary_code(std::vector<int>{1, 1, 1});
    CHECK(asymmetric_inner_product(e, ones) == doctest::Approx(1.5));
    CHECK_THROWS_AS(asymmetric_inner_product(e, BinaryCode(4)), ValidationError);
  }

  TEST_CASE("asymmetric inner product matches a naive loop") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t dims = 1 + rng() % 800;
      const auto e = oracle::random_vector(dims, rng);
      const auto s = oracle::random_signs(dims, rng);
      const double expected = oracle::dot(e, s);
      const double got = asymmetric_inner_product(e, new_binary_code(s));
      double scale = 0.0;
      for (double v : e) scale += std::abs(v);
      CHECK(std::abs(got - expected) <= 1e-9 * std::max(1.0, scale));
    }
  }

  TEST_CASE("asymmetric inner product with own sign code is the L1 norm") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const auto e = oracle::random_vector(1 + rng() % 500, rng);
      double l1 = 0.0;
      for (double v : e) l1 += std::abs(v);
      CHECK(asymmetric_inner_product(e, sign_hash(e)) == doctest::Approx(l1).epsilon(1e-12));
    }
  }
}
