#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "bpr/dataset.hpp"
#include "bpr/envelope.hpp"
#include "bpr/errors.hpp"
#include "bpr/eval.hpp"
#include "bpr/index.hpp"
#include "bpr/retriever.hpp"
#include "bpr/synthetic.hpp"
#include "bpr/trainer.hpp"
#include "manifest.hpp"

namespace bpr::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Flags shared by `train` and `sweep`.
struct TrainFlags {
  TrainConfig cfg;
  std::string cand_loss = "ranking";
  bool no_in_batch = false;

  void add(CLI::App* app) {
    app->add_option("--code-dims", cfg.code_dims, "Code length d")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "Questions per mini-batch")->capture_default_str();
    app->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    app->add_option("--lr", cfg.lr, "Peak learning rate")->capture_default_str();
    app->add_option("--warmup-ratio", cfg.warmup_ratio, "Fraction of steps spent warming up")->capture_default_str();
    app->add_option("--adam-beta1", cfg.adam_beta1)->capture_default_str();
    app->add_option("--adam-beta2", cfg.adam_beta2)->capture_default_str();
    app->add_option("--adam-eps", cfg.adam_eps)->capture_default_str();
    app->add_option("--weight-decay", cfg.weight_decay)->capture_default_str();
    app->add_option("--gamma", cfg.gamma, "Beta schedule rate")->capture_default_str();
    app->add_option("--alpha", cfg.alpha, "Ranking-loss margin")->capture_default_str();
    app->add_option("--cand-loss", cand_loss, "ranking | cross_entropy")->capture_default_str();
    app->add_flag("--no-in-batch-negatives", no_in_batch, "Contrast against hard negatives only");
    app->add_option("--init-scale", cfg.init_scale, "Std-dev of the initial weights")->capture_default_str();
  }

  TrainConfig resolve(std::uint64_t seed) const {
    TrainConfig out = cfg;
    out.cand_loss = parse_cand_loss(cand_loss);
    out.in_batch_negatives = !no_in_batch;
    out.seed = seed;
    validate_train_config(out);
    return out;
  }
};

Json to_json(const TrainConfig& c) {
  Json j;
  j["code_dims"] = c.code_dims;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["warmup_ratio"] = c.warmup_ratio;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["weight_decay"] = c.weight_decay;
  j["gamma"] = c.gamma;
  j["alpha"] = c.alpha;
  j["cand_loss"] = std::string(to_string(c.cand_loss));
  j["in_batch_negatives"] = c.in_batch_negatives;
  j["init_scale"] = c.init_scale;
  j["seed"] = c.seed;
  return j;
}

struct RetrievalFlags {
  std::size_t l = 1000;
  std::string mode = "two_stage";
  std::string algo = "scan";
  unsigned hash_bits = 20;

  void add(CLI::App* app, bool with_mode) {
    app->add_option("--l", l, "Candidates from Hamming search")->capture_default_str();
    if (with_mode) {
      app->add_option("--mode", mode, "two_stage | no_rerank | no_candidate_generation")->capture_default_str();
      app->add_option("--algo", algo, "scan | hash")->capture_default_str();
    }
    app->add_option("--hash-bits", hash_bits, "Prefix bits keyed by the hash table")->capture_default_str();
  }

  RetrieverSettings resolve() const {
    RetrieverSettings s;
    if (l < 1) throw ConfigError("l", "l must be at least 1");
    s.l = l;
    s.mode = parse_retrieval_mode(mode);
    s.algo = parse_candidate_algo(algo);
    s.hash_bits = hash_bits;
    s.shards = default_thread_count();
    return s;
  }
};

struct TimingFlags {
  TimingOptions timing;
  void add(CLI::App* app) {
    app->add_option("--warmup", timing.warmup, "Untimed queries before measuring")->capture_default_str();
    app->add_option("--min-timed", timing.min_timed, "Minimum timed queries")->capture_default_str();
  }
};

std::string path_string(const fs::path& p) { return p.generic_string(); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) ensure_dir(p.parent_path());
  std::ofstream out(p, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t stored_checksum(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  in.seekg(-static_cast<std::streamoff>(kEnvelopeTrailerBytes), std::ios::end);
  std::array<std::byte, kEnvelopeTrailerBytes> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw DataError("cannot read checksum of " + p.string());
  return get_u64(buf);
}

unsigned resolve_hash_bits(unsigned requested, bool explicit_flag, std::size_t dims) {
  const auto max_bits = static_cast<unsigned>(std::min<std::size_t>(dims, kMaxHashBits));
  if (!explicit_flag) return std::min(requested, max_bits);
  if (requested < 1 || requested > max_bits) {
    throw ConfigError("hash_bits", "hash_bits out of range [1, min(dims, 30)] (dims=" + std::to_string(dims) + ")");
  }
  return requested;
}

void check_model_input(const TwoTowerModel& model, std::size_t dims, const std::string& what) {
  if (dims != model.input_dims) {
    throw DataError(what + " vectors have " + std::to_string(dims) + " dims, model expects " +
                    std::to_string(model.input_dims));
  }
}

// ---------------------------------------------------------------- gen-data

struct GenDataCmd {
  SyntheticConfig cfg;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--n", cfg.passages, "Corpus size")->capture_default_str();
    app->add_option("--dims", cfg.input_dims, "Feature dimensionality")->capture_default_str();
    app->add_option("--clusters", cfg.clusters)->capture_default_str();
    app->add_option("--spread", cfg.cluster_spread, "Std-dev of passages around their center")->capture_default_str();
    app->add_option("--noise", cfg.query_noise, "Std-dev of question noise")->capture_default_str();
    app->add_option("--train", cfg.train_questions, "Training questions")->capture_default_str();
    app->add_option("--queries", cfg.eval_queries, "Evaluation queries")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--out", out, "Output directory")->required();
  }

  RunManifest run(std::ostream& err) {
    cfg.seed = seed;
    const SyntheticTask task = generate_synthetic_task(cfg);
    const fs::path dir(out);
    ensure_dir(dir);
    const fs::path corpus = dir / "corpus.jsonl";
    const fs::path train = dir / "train.jsonl";
    const fs::path queries = dir / "queries.jsonl";
    write_corpus_jsonl(corpus, task.corpus);
    write_training_jsonl(train, task.train);
    write_queries_jsonl(queries, task.queries);
    err << "wrote " << task.corpus.size() << " passages, " << task.train.size() << " training questions, "
        << task.queries.size() << " queries to " << dir.string() << '\n';

    RunManifest m;
    m.command = "gen-data";
    m.seed = seed;
    m.config = {{"passages", cfg.passages},         {"input_dims", cfg.input_dims},
                {"clusters", cfg.clusters},         {"cluster_spread", cfg.cluster_spread},
                {"query_noise", cfg.query_noise},   {"train_questions", cfg.train_questions},
                {"eval_queries", cfg.eval_queries}};
    m.outputs = {path_string(corpus), path_string(train), path_string(queries)};
    return m;
  }

  fs::path manifest_path() const { return fs::path(out) / "manifest.json"; }
};

// ---------------------------------------------------------------- train

struct TrainCmd {
  TrainFlags flags;
  std::uint64_t seed = 0;
  std::string data;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Training JSONL")->required();
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--seed", seed)->capture_default_str();
    flags.add(app);
  }

  RunManifest run(std::ostream& err) {
    const TrainConfig cfg = flags.resolve(seed);
    const auto dataset = read_training_jsonl(data);
    const TrainResult result = train(dataset, cfg);

    const fs::path dir(out);
    ensure_dir(dir);
    const fs::path model = dir / "model.bin";
    const fs::path trace = dir / "loss_trace.csv";
    save_model(result.model, model);
    {
      auto csv = open_output(trace);
      csv << "epoch,steps,beta,loss_cand,loss_rerank,loss_total,mean_abs_relaxed\n";
      csv << std::setprecision(10);
      for (const auto& e : result.epochs) {
        csv << e.epoch << ',' << e.steps << ',' << e.beta << ',' << e.loss_cand << ',' << e.loss_rerank << ','
            << e.loss_total << ',' << e.mean_abs_relaxed << '\n';
        err << "epoch " << e.epoch << " loss " << e.loss_total << " (cand " << e.loss_cand << ", rerank "
            << e.loss_rerank << ") beta " << e.beta << '\n';
      }
    }

    RunManifest m;
    m.command = "train";
    m.seed = seed;
    m.config = to_json(cfg);
    m.config["input_dims"] = result.model.input_dims;
    m.config["steps"] = result.beta_trace.size();
    m.inputs = {path_string(data)};
    m.outputs = {path_string(model), path_string(trace)};
    return m;
  }

  fs::path manifest_path() const { return fs::path(out) / "manifest.json"; }
};

// ---------------------------------------------------------------- build-index

struct BuildIndexCmd {
  std::string model_path;
  std::string corpus_path;
  std::string out;
  unsigned hash_bits = 20;
  CLI::Option* hash_bits_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--model", model_path, "Model checkpoint")->required();
    app->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    app->add_option("--out", out, "Index file")->required();
    hash_bits_opt = app->add_option("--hash-bits", hash_bits, "Prefix bits for the hash-table statistics")
                        ->capture_default_str();
  }

  RunManifest run(std::ostream& err) {
    const TwoTowerModel model = load_model(model_path);
    const auto corpus = read_corpus_jsonl(corpus_path);
    check_model_input(model, corpus.front().dims(), "corpus");
    const CorpusIndex index = index_corpus(model, corpus);
    const unsigned bits = resolve_hash_bits(hash_bits, hash_bits_opt->count() > 0, index.dims());
    const HashTable table = build_hash_table(index, bits);

    const fs::path path(out);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    save_index(index, path);
    const auto bytes = fs::file_size(path);
    err << "indexed " << index.size() << " passages x " << index.dims() << " bits: " << bytes << " bytes\n";

    RunManifest m;
    m.command = "build-index";
    m.config = {{"hash_bits", bits}};
    m.config["count"] = index.size();
    m.config["dims"] = index.dims();
    m.config["file_bytes"] = bytes;
    m.config["payload_bytes"] = index.payload_bytes();
    m.config["checksum"] = hex64(stored_checksum(path));
    m.config["hash_table"] = {{"bits", table.bits()},
                              {"buckets", table.bucket_count()},
                              {"max_bucket", table.max_bucket_size()},
                              {"memory_bytes", table.memory_bytes()}};
    m.inputs = {path_string(model_path), path_string(corpus_path)};
    m.outputs = {path_string(path)};
    return m;
  }

  fs::path manifest_path() const { return fs::path(out + ".manifest.json"); }
};

// ---------------------------------------------------------------- search

struct SearchCmd {
  std::string index_path;
  std::string model_path;
  std::string queries_path;
  std::string out;
  std::string manifest;
  RetrievalFlags retrieval;
  std::size_t k = 100;
  CLI::Option* hash_bits_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--index", index_path, "Index file")->required();
    app->add_option("--model", model_path, "Model checkpoint")->required();
    app->add_option("--queries", queries_path, "Query JSONL")->required();
    app->add_option("--k", k, "Results per query")->capture_default_str();
    app->add_option("--out", out, "TSV output (default: stdout)");
    app->add_option("--manifest", manifest, "Manifest path");
    retrieval.add(app, true);
    hash_bits_opt = app->get_option("--hash-bits");
  }

  RunManifest run(std::ostream& stdout_stream, std::ostream& err) {
    RetrieverSettings s = retrieval.resolve();
    if (k < 1) throw ConfigError("k", "k must be at least 1");
    if (s.mode == RetrievalMode::two_stage && k > s.l) throw ConfigError("k", "k exceeds l in two_stage mode");
    const CorpusIndex index = load_index(index_path);
    const TwoTowerModel model = load_model(model_path);
    if (model.code_dims != index.dims()) {
      throw DataError("model code dims " + std::to_string(model.code_dims) + " differ from index dims " +
                      std::to_string(index.dims()));
    }
    const auto queries = read_queries_jsonl(queries_path);
    if (!queries.empty()) check_model_input(model, queries.front().vector.dims(), "query");

    std::optional<HashTable> table;
    if (s.algo == CandidateAlgo::hash) {
      s.hash_bits = resolve_hash_bits(s.hash_bits, hash_bits_opt->count() > 0, index.dims());
      table = build_hash_table(index, s.hash_bits);
    }

    std::ofstream file;
    if (!out.empty()) file = open_output(out);
    std::ostream& tsv = out.empty() ? stdout_stream : file;
    const bool scored = s.mode != RetrievalMode::no_rerank;
    tsv << "query\trank\tid\thamming" << (scored ? "\tscore" : "") << '\n';
    tsv << std::setprecision(10);
    for (const auto& q : queries) {
      RetrievalRequest req;
      req.query_embedding = model.embed_question(q.vector);
      req.l = s.l;
      req.k = k;
      req.mode = s.mode;
      const auto results = retrieve(index, table ? &*table : nullptr, req, ScanOptions{s.shards});
      for (std::size_t r = 0; r < results.size(); ++r) {
        tsv << q.id << '\t' << (r + 1) << '\t' << results[r].id << '\t' << results[r].hamming;
        if (scored) tsv << '\t' << *results[r].score;
        tsv << '\n';
      }
    }
    if (!tsv) throw DataError("failed writing search results");
    err << "searched " << queries.size() << " queries\n";

    RunManifest m;
    m.command = "search";
    m.config = {{"l", s.l}, {"k", k}};
    m.config["mode"] = std::string(to_string(s.mode));
    m.config["algo"] = std::string(to_string(s.algo));
    m.config["hash_bits"] = s.hash_bits;
    m.inputs = {path_string(index_path), path_string(model_path), path_string(queries_path)};
    if (!out.empty()) m.outputs = {path_string(out)};
    return m;
  }

  fs::path manifest_path() const {
    if (!manifest.empty()) return manifest;
    if (!out.empty()) return out + ".manifest.json";
    return index_path + ".search-manifest.json";
  }
};

// ---------------------------------------------------------------- eval

// Training columns for report rows, taken from the train manifest next to
// the checkpoint when there is one.
ConfigEcho echo_from_model_dir(const fs::path& model_path) {
  ConfigEcho echo;
  const fs::path manifest = model_path.parent_path() / "manifest.json";
  std::ifstream in(manifest);
  if (!in) return echo;
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("command", "") != "train" || !j.contains("config")) return echo;
  const auto& c = j["config"];
  if (c.contains("gamma") && c["gamma"].is_number()) echo.gamma = format_number(c["gamma"].get<double>());
  if (c.contains("cand_loss") && c["cand_loss"].is_string()) echo.cand_loss = c["cand_loss"].get<std::string>();
  if (echo.cand_loss == "ranking" && c.contains("alpha") && c["alpha"].is_number()) {
    echo.alpha = format_number(c["alpha"].get<double>());
  }
  return echo;
}

struct EvalCmd {
  std::string model_path;
  std::string corpus_path;
  std::string queries_path;
  std::string out;
  std::uint64_t seed = 0;
  RetrievalFlags retrieval;
  TimingFlags timing;
  CLI::Option* hash_bits_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--model", model_path, "Model checkpoint")->required();
    app->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    app->add_option("--queries", queries_path, "Query JSONL with relevance labels")->required();
    app->add_option("--out", out, "CSV report")->required();
    app->add_option("--seed", seed, "Seed for the LSH baseline")->capture_default_str();
    retrieval.add(app, false);
    timing.add(app);
    hash_bits_opt = app->get_option("--hash-bits");
  }

  RunManifest run(std::ostream& err) {
    RetrieverSettings s = retrieval.resolve();
    const TwoTowerModel model = load_model(model_path);
    const auto corpus = read_corpus_jsonl(corpus_path);
    const auto queries = read_queries_jsonl(queries_path);
    if (queries.empty()) throw DataError(queries_path + ": no queries");
    check_model_input(model, corpus.front().dims(), "corpus");
    check_model_input(model, queries.front().vector.dims(), "query");
    s.hash_bits = resolve_hash_bits(s.hash_bits, hash_bits_opt->count() > 0, model.code_dims);

    const ConfigEcho echo = echo_from_model_dir(model_path);
    const auto rows = run_baseline_table(model, corpus, queries, s, seed, echo, timing.timing);
    {
      auto csv = open_output(out);
      write_report_csv(csv, rows);
    }
    err << "wrote " << rows.size() << " rows to " << out << '\n';

    RunManifest m;
    m.command = "eval";
    m.seed = seed;
    m.config = {{"l", s.l}, {"hash_bits", s.hash_bits}};
    m.config["warmup"] = timing.timing.warmup;
    m.config["min_timed"] = timing.timing.min_timed;
    m.inputs = {path_string(model_path), path_string(corpus_path), path_string(queries_path)};
    m.outputs = {path_string(out)};
    return m;
  }

  fs::path manifest_path() const { return out + ".manifest.json"; }
};

// ---------------------------------------------------------------- sweep

struct Grid {
  SweepAxis axis;
  std::vector<std::string> values;
};

Grid parse_grid(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ValidationError("--grid expects axis=v1,v2,...");
  Grid g{parse_sweep_axis(text.substr(0, eq)), {}};
  std::stringstream rest(text.substr(eq + 1));
  for (std::string v; std::getline(rest, v, ',');) {
    if (v.empty()) throw ValidationError("--grid has an empty value");
    g.values.push_back(v);
  }
  if (g.values.empty()) throw ValidationError("--grid is empty");
  return g;
}

struct SweepCmd {
  std::string data_path;
  std::string corpus_path;
  std::string queries_path;
  std::string grid;
  std::string out;
  std::uint64_t seed = 0;
  TrainFlags flags;
  RetrievalFlags retrieval;
  TimingFlags timing;
  CLI::Option* hash_bits_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--data", data_path, "Training JSONL")->required();
    app->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    app->add_option("--queries", queries_path, "Query JSONL with relevance labels")->required();
    app->add_option("--grid", grid, "axis=v1,v2,... with axis in gamma|l|alpha|cand_loss")->required();
    app->add_option("--out", out, "CSV report")->required();
    app->add_option("--seed", seed)->capture_default_str();
    flags.add(app);
    retrieval.add(app, true);
    timing.add(app);
    hash_bits_opt = app->get_option("--hash-bits");
  }

  RunManifest run(std::ostream& err) {
    const Grid g = parse_grid(grid);
    const TrainConfig cfg = flags.resolve(seed);
    RetrieverSettings s = retrieval.resolve();
    s.hash_bits = resolve_hash_bits(s.hash_bits, hash_bits_opt->count() > 0, cfg.code_dims);
    const auto train = read_training_jsonl(data_path);
    const auto corpus = read_corpus_jsonl(corpus_path);
    const auto queries = read_queries_jsonl(queries_path);
    if (queries.empty()) throw DataError(queries_path + ": no queries");
    if (train.front().input_dims() != corpus.front().dims() || queries.front().vector.dims() != corpus.front().dims()) {
      throw DataError("training, corpus and query vectors have different dimensionality");
    }

    const SweepData data{train, corpus, queries};
    const auto rows = run_sweep(g.axis, g.values, data, cfg, s, timing.timing);
    {
      auto csv = open_output(out);
      write_report_csv(csv, rows);
    }
    err << "wrote " << rows.size() << " rows to " << out << '\n';

    RunManifest m;
    m.command = "sweep";
    m.seed = seed;
    m.config = {{"axis", std::string(to_string(g.axis))}, {"values", g.values}};
    m.config["train"] = to_json(cfg);
    m.config["l"] = s.l;
    m.config["mode"] = std::string(to_string(s.mode));
    m.config["algo"] = std::string(to_string(s.algo));
    m.config["hash_bits"] = s.hash_bits;
    m.config["warmup"] = timing.timing.warmup;
    m.config["min_timed"] = timing.timing.min_timed;
    m.inputs = {path_string(data_path), path_string(corpus_path), path_string(queries_path)};
    m.outputs = {path_string(out)};
    return m;
  }

  fs::path manifest_path() const { return out + ".manifest.json"; }
};

// ---------------------------------------------------------------- dispatch

int run_inner(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool allow_rerun) {
  CLI::App app{"Binary passage retrieval: train hash codes, index, search and evaluate", "bpr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  GenDataCmd gen;
  TrainCmd train_cmd;
  BuildIndexCmd build;
  SearchCmd search;
  EvalCmd eval;
  SweepCmd sweep;
  std::string rerun_manifest;

  auto* gen_app = app.add_subcommand("gen-data", "Generate a synthetic clustered retrieval task");
  gen.add(gen_app);
  auto* train_app = app.add_subcommand("train", "Train the two-tower hashing model");
  train_cmd.add(train_app);
  auto* build_app = app.add_subcommand("build-index", "Encode a corpus into a binary index file");
  build.add(build_app);
  auto* search_app = app.add_subcommand("search", "Query an index and print ranked results as TSV");
  search.add(search_app);
  auto* eval_app = app.add_subcommand("eval", "Recall and latency table against the baselines");
  eval.add(eval_app);
  auto* sweep_app = app.add_subcommand("sweep", "Retrain or re-query over a hyperparameter grid");
  sweep.add(sweep_app);
  auto* rerun_app = app.add_subcommand("rerun", "Replay the command recorded in a manifest");
  rerun_app->add_option("--manifest", rerun_manifest, "Manifest JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << version_string() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // Subcommand help.
      for (auto* sub : app.get_subcommands()) out << sub->help();
      return kExitOk;
    }
    err << "bpr: " << e.what() << '\n';
    return kExitUsage;
  }

  if (rerun_app->parsed()) {
    if (!allow_rerun) throw ValidationError("a manifest cannot replay another rerun");
    const auto replay = read_manifest_args(rerun_manifest);
    return run_inner(replay, out, err, false);
  }

  const Stopwatch clock;
  RunManifest manifest;
  fs::path manifest_path;
  if (gen_app->parsed()) {
    manifest = gen.run(err);
    manifest_path = gen.manifest_path();
  } else if (train_app->parsed()) {
    manifest = train_cmd.run(err);
    manifest_path = train_cmd.manifest_path();
  } else if (build_app->parsed()) {
    manifest = build.run(err);
    manifest_path = build.manifest_path();
  } else if (search_app->parsed()) {
    manifest = search.run(out, err);
    manifest_path = search.manifest_path();
  } else if (eval_app->parsed()) {
    manifest = eval.run(err);
    manifest_path = eval.manifest_path();
  } else if (sweep_app->parsed()) {
    manifest = sweep.run(err);
    manifest_path = sweep.manifest_path();
  }
  manifest.args = args;
  manifest.duration_seconds = clock.seconds();
  write_manifest(manifest_path, manifest);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_inner(args, out, err, true);
  } catch (const ValidationError& e) {
    err << "bpr: invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "bpr: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const TrainingError& e) {
    err << "bpr: training failed: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "bpr: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace bpr::cli
