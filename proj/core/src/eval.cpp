#include "bpr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "bpr/errors.hpp"
#include "bpr/hashing.hpp"

namespace bpr {
namespace {

double parse_double(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string("invalid ") + what + " value '" + text + "'");
  }
}

std::size_t parse_size(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ValidationError(std::string("invalid ") + what + " value '" + text + "'");
  }
}

std::size_t max_k(std::span<const std::size_t> ks) {
  if (ks.empty()) throw ValidationError("no recall cut-offs requested");
  return *std::max_element(ks.begin(), ks.end());
}

EvalReport unavailable(const std::string& method) {
  EvalReport r;
  r.config.method = method;
  r.available = false;
  r.ks = kDefaultRecallKs;
  return r;
}

ConfigEcho echo_for(const TrainConfig& cfg, const RetrieverSettings& settings, std::size_t l) {
  ConfigEcho e;
  e.gamma = format_number(cfg.gamma);
  e.alpha = cfg.cand_loss == CandLoss::ranking ? format_number(cfg.alpha) : "n/a";
  e.cand_loss = std::string(to_string(cfg.cand_loss));
  e.l = std::to_string(l);
  e.algo = std::string(to_string(settings.algo));
  e.mode = std::string(to_string(settings.mode));
  return e;
}

struct TrainedSystem {
  CorpusIndex index;
  std::optional<HashTable> table;
  EvalQueries queries;
};

TrainedSystem build_system(const TwoTowerModel& model, const SweepData& data, const RetrieverSettings& settings) {
  TrainedSystem sys{index_corpus(model, data.corpus), std::nullopt, encode_queries(model, data.queries)};
  if (settings.algo == CandidateAlgo::hash) sys.table = build_hash_table(sys.index, settings.hash_bits);
  return sys;
}

}  // namespace

LshHasher::LshHasher(std::size_t code_dims, std::size_t input_dims, std::uint64_t seed)
    : code_dims_(code_dims), input_dims_(input_dims), projection_(code_dims * input_dims) {
  if (code_dims == 0 || input_dims == 0) throw ValidationError("LSH dimensions must be positive");
  std::mt19937_64 rng(derive_seed(seed, "lsh/projection"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : projection_) v = normal(rng);
}

LshHasher::LshHasher(std::size_t code_dims, std::size_t input_dims, std::vector<double> projection)
    : code_dims_(code_dims), input_dims_(input_dims), projection_(std::move(projection)) {
  if (code_dims == 0 || input_dims == 0) throw ValidationError("LSH dimensions must be positive");
  if (projection_.size() != code_dims * input_dims) throw ValidationError("LSH projection has wrong size");
}

BinaryCode LshHasher::hash(std::span<const double> embedding) const {
  if (embedding.size() != input_dims_) throw ValidationError("lsh_hash: dimension mismatch");
  std::vector<double> projected(code_dims_);
  for (std::size_t r = 0; r < code_dims_; ++r) {
    const double* row = projection_.data() + r * input_dims_;
    double acc = 0.0;
    for (std::size_t c = 0; c < input_dims_; ++c) acc += row[c] * embedding[c];
    projected[r] = acc;
  }
  return sign_hash(projected);
}

std::vector<SearchResult> exact_search(std::span<const std::vector<double>> embeddings, std::span<const double> query,
                                       std::size_t k) {
  if (embeddings.empty()) throw ValidationError("exact_search: empty corpus");
  if (k < 1 || k > embeddings.size()) throw ValidationError("exact_search: k out of range");
  std::vector<SearchResult> all(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != query.size()) throw ValidationError("exact_search: dimension mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) acc += query[j] * embeddings[i][j];
    all[i] = SearchResult{static_cast<PassageId>(i), 0, acc};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const SearchResult& a, const SearchResult& b) {
                      return *a.score != *b.score ? *a.score > *b.score : a.id < b.id;
                    });
  all.resize(k);
  return all;
}

std::vector<SearchResult> exact_search(std::span<const DenseVector> embeddings, std::span<const double> query,
                                       std::size_t k) {
  std::vector<std::vector<double>> rows;
  rows.reserve(embeddings.size());
  for (const auto& e : embeddings) rows.emplace_back(e.values().begin(), e.values().end());
  return exact_search(std::span<const std::vector<double>>(rows), query, k);
}

double top_k_recall(std::span<const SearchResult> results, std::span<const PassageId> relevant, std::size_t k) {
  if (relevant.empty()) throw ValidationError("top_k_recall: empty relevant set");
  if (k > results.size()) throw ValidationError("top_k_recall: k exceeds result count");
  for (std::size_t i = 0; i < k; ++i) {
    if (std::find(relevant.begin(), relevant.end(), results[i].id) != relevant.end()) return 1.0;
  }
  return 0.0;
}

std::string_view to_string(CandidateAlgo algo) noexcept { return algo == CandidateAlgo::scan ? "scan" : "hash"; }

CandidateAlgo parse_candidate_algo(std::string_view text) {
  if (text == "scan") return CandidateAlgo::scan;
  if (text == "hash") return CandidateAlgo::hash;
  throw ValidationError("unknown candidate algorithm '" + std::string(text) + "'");
}

double EvalReport::recall_at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k && i < recall.size()) return recall[i];
  }
  throw ValidationError("recall@" + std::to_string(k) + " was not evaluated");
}

EvalReport evaluate_ranker(const Ranker& ranker, std::size_t query_count,
                           std::span<const std::vector<PassageId>> relevant, std::span<const std::size_t> ks,
                           const TimingOptions& timing) {
  if (query_count == 0) throw ValidationError("evaluation needs at least one query");
  if (relevant.size() != query_count) throw ValidationError("relevance labels do not match query count");
  max_k(ks);

  EvalReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.recall.assign(ks.size(), 0.0);
  for (std::size_t i = 0; i < timing.warmup; ++i) ranker(i % query_count);

  using clock = std::chrono::steady_clock;
  const std::size_t timed = std::max(timing.min_timed, query_count);
  std::vector<double> latencies;
  latencies.reserve(timed);
  for (std::size_t t = 0; t < timed; ++t) {
    const std::size_t q = t % query_count;
    const auto start = clock::now();
    const auto results = ranker(q);
    const auto stop = clock::now();
    latencies.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
    if (t < query_count) {
      for (std::size_t j = 0; j < ks.size(); ++j) {
        report.recall[j] += top_k_recall(results, relevant[q], std::min(ks[j], results.size()));
      }
    }
  }
  for (double& r : report.recall) r /= static_cast<double>(query_count);

  double sum = 0.0;
  for (double v : latencies) sum += v;
  report.mean_latency_us = sum / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  const std::size_t mid = latencies.size() / 2;
  report.p50_latency_us =
      latencies.size() % 2 == 1 ? latencies[mid] : 0.5 * (latencies[mid - 1] + latencies[mid]);
  report.timed_queries = latencies.size();
  return report;
}

EvalReport run_eval(const CorpusIndex& index, const HashTable* table, const RetrieverSettings& settings,
                    const EvalQueries& queries, std::span<const std::size_t> ks, const TimingOptions& timing) {
  if (settings.algo == CandidateAlgo::hash && table == nullptr) {
    throw ValidationError("hash candidate generation needs a hash table");
  }
  const std::size_t n = index.size();
  const std::size_t l = std::min(settings.l, n);
  std::size_t depth = std::min(max_k(ks), n);
  if (settings.mode == RetrievalMode::two_stage) depth = std::min(depth, l);
  const HashTable* used_table = settings.algo == CandidateAlgo::hash ? table : nullptr;
  const ScanOptions scan{settings.shards};

  const Ranker ranker = [&](std::size_t q) {
    RetrievalRequest req;
    req.query_embedding = queries.embeddings[q];
    req.l = l;
    req.k = depth;
    req.mode = settings.mode;
    return retrieve(index, used_table, req, scan);
  };
  EvalReport report = evaluate_ranker(ranker, queries.embeddings.size(), queries.relevant, ks, timing);
  report.index_bytes = index.payload_bytes() + (used_table != nullptr ? used_table->memory_bytes() : 0);
  report.config.l = std::to_string(l);
  report.config.algo = std::string(to_string(settings.algo));
  report.config.mode = std::string(to_string(settings.mode));
  return report;
}

CorpusIndex index_corpus(const TwoTowerModel& model, std::span<const DenseVector> corpus) {
  std::vector<BinaryCode> codes;
  codes.reserve(corpus.size());
  for (const auto& x : corpus) codes.push_back(sign_hash(model.embed_passage(x)));
  return build_index(codes);
}

EvalQueries encode_queries(const TwoTowerModel& model, std::span<const QueryRecord> queries) {
  EvalQueries out;
  for (const auto& q : queries) {
    out.embeddings.push_back(model.embed_question(q.vector));
    out.relevant.push_back(q.relevant);
  }
  return out;
}

std::vector<EvalReport> run_baseline_table(const TwoTowerModel& model, std::span<const DenseVector> corpus,
                                           std::span<const QueryRecord> queries, const RetrieverSettings& settings,
                                           std::uint64_t seed, const ConfigEcho& echo, const TimingOptions& timing) {
  if (corpus.empty()) throw ValidationError("baseline table needs a non-empty corpus");
  const std::size_t n = corpus.size();
  const std::size_t d = model.code_dims;
  const EvalQueries encoded = encode_queries(model, queries);
  const std::size_t depth = std::min(max_k(kDefaultRecallKs), n);

  std::vector<std::vector<double>> passage_embeddings;
  passage_embeddings.reserve(n);
  for (const auto& x : corpus) passage_embeddings.push_back(model.embed_passage(x));

  std::vector<EvalReport> rows;

  // Exact maximum inner product search over float embeddings.
  {
    const Ranker ranker = [&](std::size_t q) {
      return exact_search(std::span<const std::vector<double>>(passage_embeddings), encoded.embeddings[q], depth);
    };
    EvalReport r = evaluate_ranker(ranker, queries.size(), encoded.relevant, kDefaultRecallKs, timing);
    r.config.method = "dpr";
    r.config.mode = "exact";
    r.index_bytes = n * d * sizeof(double);
    rows.push_back(std::move(r));
  }
  rows.push_back(unavailable("dpr+hnsw"));

  // Post-hoc random-hyperplane LSH at the same bit width, Hamming ranking only.
  {
    const LshHasher lsh(d, d, derive_seed(seed, "eval/lsh"));
    std::vector<BinaryCode> codes;
    codes.reserve(n);
    for (const auto& e : passage_embeddings) codes.push_back(lsh.hash(e));
    const CorpusIndex lsh_index = build_index(codes);
    std::vector<BinaryCode> query_codes;
    for (const auto& e : encoded.embeddings) query_codes.push_back(lsh.hash(e));
    const ScanOptions scan{settings.shards};
    const Ranker ranker = [&](std::size_t q) { return linear_scan(lsh_index, query_codes[q], depth, scan); };
    EvalReport r = evaluate_ranker(ranker, queries.size(), encoded.relevant, kDefaultRecallKs, timing);
    r.config.method = "dpr+lsh";
    r.config.algo = "scan";
    r.config.mode = "no_rerank";
    r.index_bytes = lsh_index.payload_bytes();
    rows.push_back(std::move(r));
  }
  rows.push_back(unavailable("dpr+pq"));

  const CorpusIndex index = index_corpus(model, corpus);
  const HashTable table = build_hash_table(index, std::min<unsigned>(settings.hash_bits, static_cast<unsigned>(std::min<std::size_t>(d, kMaxHashBits))));
  auto bpr_row = [&](CandidateAlgo algo, RetrievalMode mode) {
    RetrieverSettings s = settings;
    s.algo = algo;
    s.mode = mode;
    EvalReport r = run_eval(index, &table, s, encoded, kDefaultRecallKs, timing);
    r.config.method = "bpr";
    r.config.gamma = echo.gamma;
    r.config.alpha = echo.alpha;
    r.config.cand_loss = echo.cand_loss;
    return r;
  };
  rows.push_back(bpr_row(CandidateAlgo::scan, RetrievalMode::two_stage));
  rows.push_back(bpr_row(CandidateAlgo::hash, RetrievalMode::two_stage));
  rows.push_back(bpr_row(CandidateAlgo::hash, RetrievalMode::no_rerank));
  rows.push_back(bpr_row(CandidateAlgo::scan, RetrievalMode::no_candidate_generation));
  return rows;
}

std::string_view to_string(SweepAxis axis) noexcept {
  switch (axis) {
    case SweepAxis::gamma: return "gamma";
    case SweepAxis::l: return "l";
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::cand_loss: return "cand_loss";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view text) {
  if (text == "gamma") return SweepAxis::gamma;
  if (text == "l") return SweepAxis::l;
  if (text == "alpha") return SweepAxis::alpha;
  if (text == "cand_loss") return SweepAxis::cand_loss;
  throw ValidationError("unknown sweep axis '" + std::string(text) + "'");
}

std::vector<EvalReport> run_sweep(SweepAxis axis, std::span<const std::string> grid, const SweepData& data,
                                  const TrainConfig& base_train, const RetrieverSettings& base_retrieval,
                                  const TimingOptions& timing) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  std::vector<EvalReport> rows;

  if (axis == SweepAxis::l) {
    std::vector<std::size_t> ls;
    for (const auto& v : grid) ls.push_back(parse_size(v, "l"));
    const TwoTowerModel model = train(data.train, base_train).model;
    const TrainedSystem sys = build_system(model, data, base_retrieval);
    for (std::size_t l : ls) {
      if (l < 1) throw ValidationError("l must be at least 1");
      RetrieverSettings s = base_retrieval;
      s.l = l;
      EvalReport r = run_eval(sys.index, sys.table ? &*sys.table : nullptr, s, sys.queries, kDefaultRecallKs, timing);
      r.config = echo_for(base_train, s, std::min(l, sys.index.size()));
      rows.push_back(std::move(r));
    }
    return rows;
  }

  std::vector<TrainConfig> configs;
  for (const auto& v : grid) {
    TrainConfig cfg = base_train;
    switch (axis) {
      case SweepAxis::gamma: cfg.gamma = parse_double(v, "gamma"); break;
      case SweepAxis::alpha:
        if (v == "cross_entropy") {
          cfg.cand_loss = CandLoss::cross_entropy;
        } else {
          cfg.cand_loss = CandLoss::ranking;
          cfg.alpha = parse_double(v, "alpha");
        }
        break;
      case SweepAxis::cand_loss: cfg.cand_loss = parse_cand_loss(v); break;
      case SweepAxis::l: break;
    }
    validate_train_config(cfg);
    configs.push_back(cfg);
  }
  for (const auto& cfg : configs) {
    const TwoTowerModel model = train(data.train, cfg).model;
    const TrainedSystem sys = build_system(model, data, base_retrieval);
    EvalReport r =
        run_eval(sys.index, sys.table ? &*sys.table : nullptr, base_retrieval, sys.queries, kDefaultRecallKs, timing);
    r.config = echo_for(cfg, base_retrieval, std::min(base_retrieval.l, sys.index.size()));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << v;
  return out.str();
}

void write_report_csv(std::ostream& out, std::span<const EvalReport> rows) {
  const std::vector<std::size_t>& ks = rows.empty() ? kDefaultRecallKs : rows.front().ks;
  out << "method,gamma,alpha,cand_loss,l,algo,mode";
  for (std::size_t k : ks) out << ",recall@" << k;
  out << ",p50_latency_us,index_bytes\n";
  for (const auto& r : rows) {
    const auto& c = r.config;
    out << c.method << ',' << c.gamma << ',' << c.alpha << ',' << c.cand_loss << ',' << c.l << ',' << c.algo << ','
        << c.mode;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      out << ',';
      if (r.available && j < r.recall.size()) {
        out << std::fixed << std::setprecision(4) << r.recall[j] << std::defaultfloat;
      } else {
        out << "n/a";
      }
    }
    if (r.available) {
      out << ',' << std::fixed << std::setprecision(1) << r.p50_latency_us << std::defaultfloat << ',' << r.index_bytes;
    } else {
      out << ",n/a,n/a";
    }
    out << '\n';
  }
}

}  // namespace bpr
