#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bpr/core.hpp"
#include "bpr/index.hpp"

namespace bpr {

enum class RetrievalMode {
  two_stage,                // Hamming top-l, then rerank by <e_q, h_p>
  no_rerank,                // Hamming top-k only
  no_candidate_generation,  // rerank score over the whole corpus
};

std::string_view to_string(RetrievalMode mode) noexcept;
RetrievalMode parse_retrieval_mode(std::string_view text);  // throws ValidationError

struct RetrievalRequest {
  std::vector<double> query_embedding;    // e_q
  std::optional<BinaryCode> query_code;   // h_q; sign_hash(e_q) when absent
  std::size_t l = 1000;
  std::size_t k = 100;
  RetrievalMode mode = RetrievalMode::two_stage;
};

// sign_hash(e_q). Throws ValidationError on NaN.
BinaryCode derive_query_code(std::span<const double> query_embedding);

/**
 * Runs one query. Candidates come from `table` via hash_lookup when given,
 * otherwise from linear_scan. l is clamped to the corpus size. Reranked
 * results are ordered by (score desc, id asc); no_rerank results by
 * (hamming asc, id asc) without scores. Every result carries its Hamming
 * distance to h_q.
 */
std::vector<SearchResult> retrieve(const CorpusIndex& index, const HashTable* table,
                                   const RetrievalRequest& request, const ScanOptions& options = {});

}  // namespace bpr
