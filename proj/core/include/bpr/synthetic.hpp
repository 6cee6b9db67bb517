#pragma once

// Clustered synthetic retrieval task.
//
// Passages are Gaussian points around `clusters` random centers. A question
// about passage p is a fixed signed permutation of p's features plus
// isotropic noise, so the two towers must learn different maps. Each
// training question carries one hard negative: another passage from the
// positive's cluster.

#include <cstdint>
#include <span>
#include <vector>

#include "bpr/core.hpp"
#include "bpr/dataset.hpp"

namespace bpr {

struct SyntheticConfig {
  std::size_t passages = 20000;
  std::size_t input_dims = 64;
  std::size_t clusters = 200;
  double cluster_spread = 0.5;  // std-dev of passages around their center
  double query_noise = 0.3;     // std-dev of question noise
  std::size_t train_questions = 512;
  std::size_t eval_queries = 500;
  std::uint64_t seed = 0;
};

struct SyntheticTask {
  std::vector<DenseVector> corpus;
  std::vector<std::uint32_t> cluster_of;
  std::vector<TrainingInstance> train;
  std::vector<PassageId> train_targets;
  std::vector<PassageId> train_hard_negatives;
  std::vector<QueryRecord> queries;  // relevant = {target passage}
  // Question transform: q[i] = signs[i] * p[permutation[i]] + noise.
  std::vector<std::size_t> permutation;
  std::vector<int> signs;
};

// Throws ValidationError on inconsistent sizes (e.g. zero passages).
SyntheticTask generate_synthetic_task(const SyntheticConfig& cfg);

// Inner product between p and the noise-free inverse transform of q.
double planted_score(const SyntheticTask& task, std::span<const double> question, std::span<const double> passage);

}  // namespace bpr
