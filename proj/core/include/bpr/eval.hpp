#pragma once

// Baselines, recall/latency measurement and the sweep harness.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpr/core.hpp"
#include "bpr/dataset.hpp"
#include "bpr/index.hpp"
#include "bpr/retriever.hpp"
#include "bpr/trainer.hpp"

namespace bpr {

/// Random-hyperplane LSH: sign(R e) with R drawn i.i.d. N(0, 1) from a seed.
class LshHasher {
 public:
  LshHasher(std::size_t code_dims, std::size_t input_dims, std::uint64_t seed);
  // Explicit projection, code_dims x input_dims row-major.
  LshHasher(std::size_t code_dims, std::size_t input_dims, std::vector<double> projection);

  std::size_t code_dims() const noexcept { return code_dims_; }
  std::size_t input_dims() const noexcept { return input_dims_; }
  std::span<const double> projection() const noexcept { return projection_; }

  BinaryCode hash(std::span<const double> embedding) const;

 private:
  std::size_t code_dims_;
  std::size_t input_dims_;
  std::vector<double> projection_;
};

inline BinaryCode lsh_hash(const LshHasher& hasher, std::span<const double> embedding) { return hasher.hash(embedding); }

// Top-k by float inner product, ties by ascending id. hamming is left 0.
std::vector<SearchResult> exact_search(std::span<const std::vector<double>> embeddings, std::span<const double> query,
                                       std::size_t k);
std::vector<SearchResult> exact_search(std::span<const DenseVector> embeddings, std::span<const double> query,
                                       std::size_t k);

// 1.0 if any relevant id is among the first k results, else 0.0.
// Throws ValidationError on an empty relevant set or k > results.size().
double top_k_recall(std::span<const SearchResult> results, std::span<const PassageId> relevant, std::size_t k);

enum class CandidateAlgo { scan, hash };
std::string_view to_string(CandidateAlgo algo) noexcept;
CandidateAlgo parse_candidate_algo(std::string_view text);

struct RetrieverSettings {
  std::size_t l = 1000;
  RetrievalMode mode = RetrievalMode::two_stage;
  CandidateAlgo algo = CandidateAlgo::scan;
  unsigned hash_bits = 20;
  std::size_t shards = 1;
};

struct TimingOptions {
  std::size_t warmup = 10;
  std::size_t min_timed = 100;
};

// Configuration columns echoed into report rows ("n/a" where not applicable).
struct ConfigEcho {
  std::string method = "bpr";
  std::string gamma = "n/a";
  std::string alpha = "n/a";
  std::string cand_loss = "n/a";
  std::string l = "n/a";
  std::string algo = "n/a";
  std::string mode = "n/a";
};

struct EvalReport {
  ConfigEcho config;
  bool available = true;  // false for placeholder rows of out-of-scope systems
  std::vector<std::size_t> ks;
  std::vector<double> recall;  // parallel to ks
  double mean_latency_us = 0.0;
  double p50_latency_us = 0.0;
  std::size_t timed_queries = 0;
  std::size_t index_bytes = 0;

  double recall_at(std::size_t k) const;  // throws if k was not evaluated
};

inline const std::vector<std::size_t> kDefaultRecallKs{1, 20, 100};

struct EvalQueries {
  std::vector<std::vector<double>> embeddings;  // e_q
  std::vector<std::vector<PassageId>> relevant;
};

using Ranker = std::function<std::vector<SearchResult>(std::size_t query)>;

// Recall over every query plus single-thread wall-clock latency: `warmup`
// untimed calls, then at least max(min_timed, queries) timed calls cycling
// over the query set. Recall@k uses min(k, results) when fewer come back.
EvalReport evaluate_ranker(const Ranker& ranker, std::size_t query_count,
                           std::span<const std::vector<PassageId>> relevant, std::span<const std::size_t> ks,
                           const TimingOptions& timing = {});

// Evaluates the retriever over a built index; the table is used when
// settings.algo == hash (it must then be non-null).
EvalReport run_eval(const CorpusIndex& index, const HashTable* table, const RetrieverSettings& settings,
                    const EvalQueries& queries, std::span<const std::size_t> ks = kDefaultRecallKs,
                    const TimingOptions& timing = {});

// sign(W_p x + b_p) for every passage.
CorpusIndex index_corpus(const TwoTowerModel& model, std::span<const DenseVector> corpus);
EvalQueries encode_queries(const TwoTowerModel& model, std::span<const QueryRecord> queries);

/**
 * Rows shaped like the main results and ablation tables: exact float search,
 * LSH over the float passage embeddings at the same bit width, the binary
 * retriever with scan and hash candidate generation, and both ablations.
 * Out-of-scope systems (HNSW, PQ) appear as unavailable placeholder rows.
 * `echo` supplies the training columns of the binary-retriever rows.
 */
std::vector<EvalReport> run_baseline_table(const TwoTowerModel& model, std::span<const DenseVector> corpus,
                                           std::span<const QueryRecord> queries, const RetrieverSettings& settings,
                                           std::uint64_t seed, const ConfigEcho& echo = {},
                                           const TimingOptions& timing = {});

enum class SweepAxis { gamma, l, alpha, cand_loss };
std::string_view to_string(SweepAxis axis) noexcept;
SweepAxis parse_sweep_axis(std::string_view text);  // throws ValidationError on unknown axis

struct SweepData {
  std::span<const TrainingInstance> train;
  std::span<const DenseVector> corpus;
  std::span<const QueryRecord> queries;
};

/**
 * One report per grid value. The l axis trains once and re-queries the same
 * index; every other axis retrains. On the alpha axis the value
 * "cross_entropy" switches the candidate loss instead of the margin.
 */
std::vector<EvalReport> run_sweep(SweepAxis axis, std::span<const std::string> grid, const SweepData& data,
                                  const TrainConfig& base_train, const RetrieverSettings& base_retrieval,
                                  const TimingOptions& timing = {});

// method,gamma,alpha,cand_loss,l,algo,mode,recall@k...,p50_latency_us,index_bytes
void write_report_csv(std::ostream& out, std::span<const EvalReport> rows);

std::string format_number(double v);

}  // namespace bpr
