#include "bpr/retriever.hpp"

#include <algorithm>
#include <sstream>

#include "bpr/errors.hpp"
#include "bpr/hashing.hpp"

namespace bpr {
namespace {

bool by_score(const SearchResult& a, const SearchResult& b) noexcept {
  if (*a.score != *b.score) return *a.score > *b.score;
  return a.id < b.id;
}

void keep_top_k_by_score(std::vector<SearchResult>& results, std::size_t k) {
  k = std::min(k, results.size());
  std::partial_sort(results.begin(), results.begin() + static_cast<std::ptrdiff_t>(k), results.end(), by_score);
  results.resize(k);
}

}  // namespace

std::string_view to_string(RetrievalMode mode) noexcept {
  switch (mode) {
    case RetrievalMode::two_stage: return "two_stage";
    case RetrievalMode::no_rerank: return "no_rerank";
    case RetrievalMode::no_candidate_generation: return "no_candidate_generation";
  }
  return "unknown";
}

RetrievalMode parse_retrieval_mode(std::string_view text) {
  if (text == "two_stage") return RetrievalMode::two_stage;
  if (text == "no_rerank") return RetrievalMode::no_rerank;
  if (text == "no_candidate_generation") return RetrievalMode::no_candidate_generation;
  throw ValidationError("unknown retrieval mode '" + std::string(text) + "'");
}

BinaryCode derive_query_code(std::span<const double> query_embedding) { return sign_hash(query_embedding); }

std::vector<SearchResult> retrieve(const CorpusIndex& index, const HashTable* table,
                                   const RetrievalRequest& request, const ScanOptions& options) {
  const std::span<const double> eq = request.query_embedding;
  if (eq.size() != index.dims()) {
    std::ostringstream msg;
    msg << "query embedding has " << eq.size() << " dims, index has " << index.dims();
    throw ValidationError(msg.str());
  }
  const BinaryCode hq = request.query_code ? *request.query_code : derive_query_code(eq);
  if (hq.dims() != index.dims()) throw ValidationError("query code dims differ from index dims");

  const std::size_t n = index.size();
  if (request.k < 1 || request.k > n) {
    std::ostringstream msg;
    msg << "k=" << request.k << " out of range [1, " << n << "]";
    throw ValidationError(msg.str());
  }
  if (request.l < 1) throw ValidationError("l must be at least 1");
  if (request.mode == RetrievalMode::two_stage && request.k > request.l) {
    throw ValidationError("k exceeds l in two_stage mode");
  }
  const std::size_t l = std::min(request.l, n);
  const double total = component_sum(eq);

  switch (request.mode) {
    case RetrievalMode::no_rerank: {
      const std::size_t depth = std::min(request.k, l);
      return table != nullptr ? hash_lookup(index, *table, hq, depth) : linear_scan(index, hq, depth, options);
    }
    case RetrievalMode::two_stage: {
      auto results = table != nullptr ? hash_lookup(index, *table, hq, l) : linear_scan(index, hq, l, options);
      for (auto& r : results) r.score = asymmetric_inner_product_words(eq, total, index.row(r.id));
      keep_top_k_by_score(results, request.k);
      return results;
    }
    case RetrievalMode::no_candidate_generation: {
      std::vector<SearchResult> results(n);
      const auto q = hq.words();
      for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<PassageId>(i);
        const auto row = index.row(id);
        results[i] = SearchResult{id, hamming_words(q, row), asymmetric_inner_product_words(eq, total, row)};
      }
      keep_top_k_by_score(results, request.k);
      return results;
    }
  }
  return {};
}

}  // namespace bpr
