#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bpr/hashing.hpp"
#include "bpr/index.hpp"
#include "bpr/retriever.hpp"

namespace {

using namespace bpr;

BinaryCode random_code(std::size_t dims, std::mt19937_64& rng) {
  std::vector<int> signs(dims);
  for (auto& s : signs) s = (rng() & 1U) ? 1 : -1;
  return BinaryCode::from_signs(signs);
}

CorpusIndex random_index(std::size_t n, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> storage(n * words_for_dims(dims));
  for (auto& w : storage) w = rng();
  // keep padding bits clear
  if (dims % 64 != 0) {
    const std::uint64_t mask = (std::uint64_t{1} << (dims % 64)) - 1;
    for (std::size_t i = words_for_dims(dims) - 1; i < storage.size(); i += words_for_dims(dims)) storage[i] &= mask;
  }
  return CorpusIndex(dims, n, std::move(storage));
}

void BM_Hamming(benchmark::State& state) {
  const auto dims = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_code(dims, rng);
  const auto b = random_code(dims, rng);
  for (auto _ : state) benchmark::DoNotOptimize(hamming_distance(a, b));
}
BENCHMARK(BM_Hamming)->Arg(64)->Arg(256)->Arg(768);

void BM_AsymmetricInnerProduct(benchmark::State& state) {
  const auto dims = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  std::vector<double> e(dims);
  for (auto& v : e) v = normal(rng);
  const auto code = random_code(dims, rng);
  for (auto _ : state) benchmark::DoNotOptimize(asymmetric_inner_product(e, code));
}
BENCHMARK(BM_AsymmetricInnerProduct)->Arg(64)->Arg(256)->Arg(768);

void BM_LinearScan(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto index = random_index(n, 768, 3);
  std::mt19937_64 rng(4);
  const auto q = random_code(768, rng);
  for (auto _ : state) benchmark::DoNotOptimize(linear_scan(index, q, 1000, {1}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_LinearScan)->Arg(250'000)->Arg(500'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_HashLookup(benchmark::State& state) {
  const auto l = static_cast<std::size_t>(state.range(0));
  const auto index = random_index(1'000'000, 768, 5);
  const auto table = build_hash_table(index, 20);
  std::mt19937_64 rng(6);
  const auto q = random_code(768, rng);
  for (auto _ : state) benchmark::DoNotOptimize(hash_lookup(index, table, q, l));
}
BENCHMARK(BM_HashLookup)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TwoStage(benchmark::State& state) {
  const auto index = random_index(1'000'000, 768, 7);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  RetrievalRequest request;
  request.query_embedding.resize(768);
  for (auto& v : request.query_embedding) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(retrieve(index, nullptr, request, {1}));
}
BENCHMARK(BM_TwoStage)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
