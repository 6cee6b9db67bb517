#include <doctest.h>

#include <cstdlib>
#include <random>

#include "bpr/core.hpp"
#include "bpr/errors.hpp"
#include "oracles.hpp"

using namespace bpr;

TEST_SUITE("core") {
  TEST_CASE("new_binary_code packs LSB-first") {
    const std::vector<int> signs{1, -1, 1, 1, -1, -1, -1, -1};
    const BinaryCode code = new_binary_code(signs);
    CHECK(code.dims() == 8);
    REQUIRE(code.words().size() == 1);
    CHECK(code.words()[0] == 0b00001101ULL);
  }

  TEST_CASE("all-negative code is zero") {
    const std::vector<int> signs(64, -1);
    const BinaryCode code = new_binary_code(signs);
    CHECK(code.dims() == 64);
    REQUIRE(code.words().size() == 1);
    CHECK(code.words()[0] == 0ULL);
  }

  TEST_CASE("padding bits stay zero past dims") {
    const std::vector<int> signs(65, 1);
    const BinaryCode code = new_binary_code(signs);
    CHECK(code.dims() == 65);
    REQUIRE(code.words().size() == 2);
    CHECK(code.words()[0] == 0xFFFF'FFFF'FFFF'FFFFULL);
    CHECK(code.words()[1] == 0x1ULL);
  }

  TEST_CASE("invalid elements are rejected") {
    CHECK_THROWS_AS(new_binary_code(std::vector<int>{1, 0, -1}), ValidationError);
    CHECK_THROWS_AS(new_binary_code(std::vector<int>{2}), ValidationError);
    CHECK_THROWS_AS(new_binary_code(std::vector<int>{}), ValidationError);
  }

  TEST_CASE("word constructor rejects bad length and dirty padding") {
    CHECK_THROWS_AS(BinaryCode(65, {0}), ValidationError);
    CHECK_THROWS_AS(BinaryCode(3, {0b1000}), ValidationError);
    CHECK_NOTHROW(BinaryCode(3, {0b0111}));
  }

  TEST_CASE("round trip and canonical equality over random sequences") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t dims = 1 + rng() % 300;
      const auto signs = oracle::random_signs(dims, rng);
      const BinaryCode a = new_binary_code(signs);
      const BinaryCode b = new_binary_code(signs);
      CHECK(a.to_signs() == signs);
      CHECK(a == b);
    }
  }

  TEST_CASE("dense vectors must be finite") {
    CHECK_THROWS_AS(DenseVector({1.0, std::nan("")}), ValidationError);
    CHECK_THROWS_AS(DenseVector({INFINITY}), ValidationError);
    CHECK_THROWS_AS(DenseVector(std::vector<double>{}), ValidationError);
    const DenseVector v{0.5, -2.0};
    CHECK(v.dims() == 2);
    CHECK(v[1] == -2.0);
  }

  TEST_CASE("training instances share one dimensionality") {
    TrainingInstance inst{DenseVector{1.0, 2.0}, DenseVector{1.0, 2.0}, {DenseVector{1.0}}};
    CHECK_THROWS_AS(check_instance(inst), ValidationError);
    inst.negatives = {DenseVector{0.0, 1.0}};
    CHECK_NOTHROW(check_instance(inst));
  }

  TEST_CASE("validate_config") {
    EngineConfig cfg;
    CHECK(cfg.dims == 768);
    CHECK(cfg.candidates == 1000);
    CHECK(cfg.top_k == 100);
    CHECK(cfg.gamma == 0.1);
    CHECK(cfg.alpha == 2.0);
    CHECK_NOTHROW(validate_config(cfg));

    SUBCASE("k exceeds l") {
      cfg.top_k = 2000;
      try {
        validate_config(cfg);
        FAIL("expected ConfigError");
      } catch (const ConfigError& e) {
        CHECK(e.field() == "top_k");
        CHECK(std::string(e.what()).find("k exceeds l") != std::string::npos);
      }
    }
    SUBCASE("hash bits out of range") {
      cfg.hash_bits = 64;
      try {
        validate_config(cfg);
        FAIL("expected ConfigError");
      } catch (const ConfigError& e) {
        CHECK(e.field() == "hash_bits");
        CHECK(std::string(e.what()).find("hash_bits out of range") != std::string::npos);
      }
    }
    SUBCASE("hash bits bounded by dims") {
      cfg.dims = 8;
      cfg.hash_bits = 9;
      CHECK_THROWS_AS(validate_config(cfg), ConfigError);
      cfg.hash_bits = 8;
      CHECK_NOTHROW(validate_config(cfg));
    }
  }

  TEST_CASE("derive_seed separates labels and is stable") {
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  }

  TEST_CASE("BPR_THREADS caps worker count") {
    ::setenv("BPR_THREADS", "1", 1);
    CHECK(default_thread_count() == 1);
    ::unsetenv("BPR_THREADS");
    CHECK(default_thread_count() >= 1);
  }
}
