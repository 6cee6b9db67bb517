#include "bpr/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "bpr/errors.hpp"

namespace bpr {
namespace {

std::vector<double> make_question(const SyntheticTask& task, const DenseVector& passage, double noise,
                                  std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> q(passage.dims());
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = task.signs[i] * passage[task.permutation[i]] + noise * normal(rng);
  }
  return q;
}

}  // namespace

SyntheticTask generate_synthetic_task(const SyntheticConfig& cfg) {
  if (cfg.passages == 0) throw ConfigError("passages", "passages must be positive");
  if (cfg.input_dims == 0) throw ConfigError("input_dims", "input_dims must be positive");
  if (cfg.clusters == 0 || cfg.clusters > cfg.passages) throw ConfigError("clusters", "clusters must be in [1, passages]");
  if (!(cfg.cluster_spread >= 0.0)) throw ConfigError("cluster_spread", "cluster_spread must be non-negative");
  if (!(cfg.query_noise >= 0.0)) throw ConfigError("query_noise", "query_noise must be non-negative");
  if (cfg.train_questions + cfg.eval_queries > cfg.passages) {
    throw ConfigError("train_questions", "train_questions + eval_queries exceeds passages");
  }
  if (cfg.train_questions > 0 && cfg.passages < 2) throw ConfigError("passages", "hard negatives need at least 2 passages");

  SyntheticTask task;
  const std::size_t dims = cfg.input_dims;
  std::normal_distribution<double> normal(0.0, 1.0);

  std::mt19937_64 transform_rng(derive_seed(cfg.seed, "synthetic/transform"));
  task.permutation.resize(dims);
  std::iota(task.permutation.begin(), task.permutation.end(), 0);
  std::shuffle(task.permutation.begin(), task.permutation.end(), transform_rng);
  task.signs.resize(dims);
  for (auto& s : task.signs) s = (transform_rng() & 1U) != 0 ? 1 : -1;

  std::mt19937_64 corpus_rng(derive_seed(cfg.seed, "synthetic/corpus"));
  std::vector<std::vector<double>> centers(cfg.clusters, std::vector<double>(dims));
  for (auto& c : centers) {
    for (auto& v : c) v = normal(corpus_rng);
  }
  std::uniform_int_distribution<std::size_t> pick_cluster(0, cfg.clusters - 1);
  std::vector<std::vector<PassageId>> members(cfg.clusters);
  task.corpus.reserve(cfg.passages);
  for (std::size_t i = 0; i < cfg.passages; ++i) {
    // The first `clusters` passages seed one cluster each so none is empty.
    const std::size_t k = i < cfg.clusters ? i : pick_cluster(corpus_rng);
    std::vector<double> x(dims);
    for (std::size_t j = 0; j < dims; ++j) x[j] = centers[k][j] + cfg.cluster_spread * normal(corpus_rng);
    task.corpus.emplace_back(std::move(x));
    task.cluster_of.push_back(static_cast<std::uint32_t>(k));
    members[k].push_back(static_cast<PassageId>(i));
  }

  std::mt19937_64 split_rng(derive_seed(cfg.seed, "synthetic/split"));
  std::vector<PassageId> ids(cfg.passages);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), split_rng);

  std::mt19937_64 question_rng(derive_seed(cfg.seed, "synthetic/questions"));
  for (std::size_t t = 0; t < cfg.train_questions; ++t) {
    const PassageId target = ids[t];
    const auto& mates = members[task.cluster_of[target]];
    PassageId negative = target;
    if (mates.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, mates.size() - 2);
      const std::size_t j = pick(question_rng);
      // Skip the target itself.
      const auto pos = static_cast<std::size_t>(std::find(mates.begin(), mates.end(), target) - mates.begin());
      negative = mates[j < pos ? j : j + 1];
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, cfg.passages - 2);
      const std::size_t j = pick(question_rng);
      negative = static_cast<PassageId>(j < target ? j : j + 1);
    }
    TrainingInstance inst;
    inst.question = DenseVector(make_question(task, task.corpus[target], cfg.query_noise, question_rng));
    inst.positive = task.corpus[target];
    inst.negatives.push_back(task.corpus[negative]);
    task.train.push_back(std::move(inst));
    task.train_targets.push_back(target);
    task.train_hard_negatives.push_back(negative);
  }

  std::mt19937_64 query_rng(derive_seed(cfg.seed, "synthetic/queries"));
  for (std::size_t e = 0; e < cfg.eval_queries; ++e) {
    const PassageId target = ids[cfg.train_questions + e];
    QueryRecord q;
    q.id = e;
    q.vector = DenseVector(make_question(task, task.corpus[target], cfg.query_noise, query_rng));
    q.relevant = {target};
    task.queries.push_back(std::move(q));
  }
  return task;
}

double planted_score(const SyntheticTask& task, std::span<const double> question, std::span<const double> passage) {
  if (question.size() != task.permutation.size() || passage.size() != task.permutation.size()) {
    throw ValidationError("planted_score: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < question.size(); ++i) {
    acc += task.signs[i] * question[i] * passage[task.permutation[i]];
  }
  return acc;
}

}  // namespace bpr
