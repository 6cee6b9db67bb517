#pragma once

// JSON-lines files exchanged between commands.
//
//   train.jsonl    {"question": [..], "positive": [..], "negatives": [[..], ..]}
//   corpus.jsonl   {"id": 0, "vector": [..]}            ids dense, in line order
//   queries.jsonl  {"id": 0, "vector": [..], "relevant": [12, ..]}
//
// Readers throw DataError carrying the 1-based line number of the bad line.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bpr/core.hpp"

namespace bpr {

struct QueryRecord {
  std::uint64_t id = 0;
  DenseVector vector;
  std::vector<PassageId> relevant;
};

std::vector<TrainingInstance> read_training_jsonl(const std::filesystem::path& path);
void write_training_jsonl(const std::filesystem::path& path, std::span<const TrainingInstance> data);

std::vector<DenseVector> read_corpus_jsonl(const std::filesystem::path& path);
void write_corpus_jsonl(const std::filesystem::path& path, std::span<const DenseVector> corpus);

std::vector<QueryRecord> read_queries_jsonl(const std::filesystem::path& path);
void write_queries_jsonl(const std::filesystem::path& path, std::span<const QueryRecord> queries);

}  // namespace bpr
