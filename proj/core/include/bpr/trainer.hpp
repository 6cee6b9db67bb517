#pragma once

// Desk-scale learning to hash. Each tower is a single affine layer
// e = W x + b followed by the hash layer (sign at inference, tanh(beta e)
// during training). The objective is L = L_cand + L_rerank:
//
//   L_cand   ranking:       sum_j max(0, alpha - (<h~q, h~p+> - <h~q, h~pj>))
//            cross entropy: -log softmax of <h~q, h~p+> among candidates
//   L_rerank                -log softmax of <e_q, h~p+> among candidates
//
// Candidates for question i are its positive, its own hard negatives and,
// with in-batch negatives, the positives of every other question in the
// mini-batch. Other questions' hard negatives are never shared.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "bpr/core.hpp"

namespace bpr {

enum class CandLoss { ranking, cross_entropy };

std::string_view to_string(CandLoss loss) noexcept;
CandLoss parse_cand_loss(std::string_view text);

// Defaults follow the reference fine-tuning recipe (batch 128, peak lr 2e-5,
// linear decay with 6% warmup, Adam 0.9/0.999/1e-6, no weight decay).
struct TrainConfig {
  std::size_t code_dims = 768;
  std::size_t batch_size = 128;
  std::size_t epochs = 40;
  double lr = 2e-5;
  double warmup_ratio = 0.06;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-6;
  double weight_decay = 0.0;
  double gamma = 0.1;
  double alpha = 2.0;
  CandLoss cand_loss = CandLoss::ranking;
  bool in_batch_negatives = true;
  // Std-dev of the Gaussian weight init. Small relative to lr * steps so the
  // untrained towers start near the origin; biases start at zero.
  double init_scale = 1e-4;
  std::uint64_t seed = 0;
};

// Throws ConfigError naming the offending field.
void validate_train_config(const TrainConfig& cfg);

struct TwoTowerModel {
  std::size_t input_dims = 0;
  std::size_t code_dims = 0;
  std::vector<double> question_weights;  // code_dims x input_dims, row-major
  std::vector<double> question_bias;     // code_dims
  std::vector<double> passage_weights;
  std::vector<double> passage_bias;

  static TwoTowerModel zeros(std::size_t input_dims, std::size_t code_dims);
  static TwoTowerModel initialize(std::size_t input_dims, std::size_t code_dims, double init_scale,
                                  std::uint64_t seed);

  std::size_t parameter_count() const noexcept { return 2 * code_dims * (input_dims + 1); }

  // e = W x + b. Throw ValidationError on a dimension mismatch.
  std::vector<double> embed_question(std::span<const double> x) const;
  std::vector<double> embed_passage(std::span<const double> x) const;

  friend bool operator==(const TwoTowerModel&, const TwoTowerModel&) = default;
};

struct Encoded {
  std::vector<double> embedding;  // e
  std::vector<double> relaxed;    // tanh(beta e)
  BinaryCode code;                // sign(e)
};

Encoded encode_question(const TwoTowerModel& model, std::span<const double> x, double beta);
Encoded encode_passage(const TwoTowerModel& model, std::span<const double> x, double beta);

// Score-level losses for one question. `negatives` must be non-empty for the
// softmax losses. All softmax terms use a max-shifted log-sum-exp.
double loss_dpr(double positive, std::span<const double> negatives);
double loss_cand_ranking(double positive, std::span<const double> negatives, double alpha);
double loss_cand_cross_entropy(double positive, std::span<const double> negatives);
double loss_rerank(double positive, std::span<const double> negatives);

using Batch = std::span<const TrainingInstance>;

// Scores for one mini-batch. Passage columns are the B positives followed by
// every question's hard negatives in order.
struct BatchScores {
  std::size_t questions = 0;
  std::size_t passages = 0;
  // candidates[i][0] is question i's positive column.
  std::vector<std::vector<std::size_t>> candidates;
  std::vector<double> cand;    // questions x passages, <h~q, h~p>
  std::vector<double> rerank;  // questions x passages, <e_q, h~p>
  std::vector<double> dense;   // questions x passages, <e_q, e_p>

  double cand_at(std::size_t q, std::size_t p) const noexcept { return cand[q * passages + p]; }
  double rerank_at(std::size_t q, std::size_t p) const noexcept { return rerank[q * passages + p]; }
  double dense_at(std::size_t q, std::size_t p) const noexcept { return dense[q * passages + p]; }
};

BatchScores score_batch(Batch batch, const TwoTowerModel& model, double beta, bool in_batch_negatives);

struct LossBreakdown {
  double cand = 0.0;    // mean over questions
  double rerank = 0.0;  // mean over questions
  double total = 0.0;   // cand + rerank
};

LossBreakdown loss_total(Batch batch, const TwoTowerModel& model, double beta, const TrainConfig& cfg);

// Mean dense-score NLL over the same candidate sets (reference objective).
double loss_dpr_batch(Batch batch, const TwoTowerModel& model, const TrainConfig& cfg);

enum class LossTerms { both, cand_only, rerank_only };

struct ModelGradients {
  TwoTowerModel grad;  // same layout as the model
  LossBreakdown loss;
};

// Analytic gradient of the selected loss terms w.r.t. every parameter,
// including the beta * (1 - tanh^2) hash-layer Jacobian.
ModelGradients gradients(Batch batch, const TwoTowerModel& model, double beta, const TrainConfig& cfg,
                         LossTerms terms = LossTerms::both);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  std::size_t steps = 0;  // optimizer steps finished at the end of the epoch
  double beta = 0.0;      // beta for the next step
  double loss_cand = 0.0;
  double loss_rerank = 0.0;
  double loss_total = 0.0;
  double mean_abs_relaxed = 0.0;  // mean |tanh(beta e)| over a fixed probe batch
};

struct TrainResult {
  TwoTowerModel model;
  std::vector<EpochStats> epochs;
  std::vector<double> beta_trace;  // beta used at each optimizer step
  std::vector<double> lr_trace;    // learning rate used at each optimizer step
};

// Linear warmup then linear decay to zero, as a function of the step index.
double learning_rate_at(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) noexcept;
std::size_t warmup_steps(const TrainConfig& cfg, std::size_t total_steps) noexcept;

// Trains from TwoTowerModel::initialize(input_dims, cfg.code_dims, ...) with
// Adam. Throws ValidationError on an empty dataset, TrainingError on a
// non-finite loss.
TrainResult train(std::span<const TrainingInstance> dataset, const TrainConfig& cfg);

inline constexpr char kModelMagic[] = "BPRMDL01";
inline constexpr std::uint32_t kModelVersion = 1;

void save_model(const TwoTowerModel& model, const std::filesystem::path& path);
TwoTowerModel load_model(const std::filesystem::path& path);

}  // namespace bpr
