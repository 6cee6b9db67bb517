#include "bpr/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "bpr/envelope.hpp"
#include "bpr/errors.hpp"
#include "bpr/hashing.hpp"

namespace bpr {
namespace {

void affine(std::span<const double> weights, std::span<const double> bias, std::span<const double> x,
            std::size_t out_dims, std::vector<double>& out) {
  const std::size_t in = x.size();
  out.resize(out_dims);
  for (std::size_t r = 0; r < out_dims; ++r) {
    const double* w = weights.data() + r * in;
    double acc = bias[r];
    for (std::size_t c = 0; c < in; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// -log softmax(scores)[pos]; writes d loss / d scores into `grad` when given.
double softmax_nll(std::span<const double> scores, std::size_t pos, std::span<double> grad = {}) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);
  if (!grad.empty()) {
    for (std::size_t j = 0; j < scores.size(); ++j) grad[j] = std::exp(scores[j] - log_z);
    grad[pos] -= 1.0;
  }
  return log_z - scores[pos];
}

double nll_positive_first(double positive, std::span<const double> negatives) {
  if (negatives.empty()) throw ValidationError("softmax loss needs at least one negative score");
  std::vector<double> scores;
  scores.reserve(negatives.size() + 1);
  scores.push_back(positive);
  scores.insert(scores.end(), negatives.begin(), negatives.end());
  return softmax_nll(scores, 0);
}

void check_batch(Batch batch, const TwoTowerModel& model, bool in_batch_negatives) {
  if (batch.empty()) throw ValidationError("batch has no questions");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_instance(batch[i]);
    if (batch[i].input_dims() != model.input_dims) {
      std::ostringstream msg;
      msg << "batch instance " << i << " has " << batch[i].input_dims() << " input dims, model expects "
          << model.input_dims;
      throw ValidationError(msg.str());
    }
    if (batch[i].negatives.empty() && (!in_batch_negatives || batch.size() == 1)) {
      throw ValidationError("batch instance " + std::to_string(i) + " has no negative passages");
    }
  }
}

// Forward activations for one batch.
struct Forward {
  std::size_t d = 0;
  std::vector<std::span<const double>> q_inputs;
  std::vector<std::span<const double>> p_inputs;
  std::vector<double> eq, hq;  // B x d
  std::vector<double> ep, hp;  // P x d
  std::vector<std::vector<std::size_t>> candidates;

  std::span<const double> row(const std::vector<double>& m, std::size_t r) const { return {m.data() + r * d, d}; }
};

Forward forward(Batch batch, const TwoTowerModel& model, double beta, bool in_batch_negatives) {
  check_batch(batch, model, in_batch_negatives);
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  Forward f;
  f.d = model.code_dims;
  const std::size_t b = batch.size();
  for (const auto& inst : batch) f.q_inputs.push_back(inst.question.values());
  for (const auto& inst : batch) f.p_inputs.push_back(inst.positive.values());
  f.candidates.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    auto& c = f.candidates[i];
    c.push_back(i);
    if (in_batch_negatives) {
      for (std::size_t k = 0; k < b; ++k) {
        if (k != i) c.push_back(k);
      }
    }
    for (const auto& neg : batch[i].negatives) {
      c.push_back(f.p_inputs.size());
      f.p_inputs.push_back(neg.values());
    }
  }

  std::vector<double> tmp;
  f.eq.resize(b * f.d);
  f.hq.resize(b * f.d);
  for (std::size_t i = 0; i < b; ++i) {
    affine(model.question_weights, model.question_bias, f.q_inputs[i], f.d, tmp);
    for (std::size_t r = 0; r < f.d; ++r) {
      f.eq[i * f.d + r] = tmp[r];
      f.hq[i * f.d + r] = std::tanh(beta * tmp[r]);
    }
  }
  const std::size_t p = f.p_inputs.size();
  f.ep.resize(p * f.d);
  f.hp.resize(p * f.d);
  for (std::size_t j = 0; j < p; ++j) {
    affine(model.passage_weights, model.passage_bias, f.p_inputs[j], f.d, tmp);
    for (std::size_t r = 0; r < f.d; ++r) {
      f.ep[j * f.d + r] = tmp[r];
      f.hp[j * f.d + r] = std::tanh(beta * tmp[r]);
    }
  }
  return f;
}

// Per-question losses plus d loss / d score for the candidate list.
struct QuestionLoss {
  double cand = 0.0;
  double rerank = 0.0;
};

QuestionLoss question_loss(const Forward& f, std::size_t i, const TrainConfig& cfg, std::vector<double>* g_cand,
                           std::vector<double>* g_rerank) {
  const auto& cands = f.candidates[i];
  const std::size_t m = cands.size();
  std::vector<double> sc(m), sr(m);
  const auto hq = f.row(f.hq, i);
  const auto eq = f.row(f.eq, i);
  for (std::size_t j = 0; j < m; ++j) {
    const auto hp = f.row(f.hp, cands[j]);
    sc[j] = dot(hq, hp);
    sr[j] = dot(eq, hp);
  }
  QuestionLoss out;
  if (g_cand != nullptr) g_cand->assign(m, 0.0);
  if (g_rerank != nullptr) g_rerank->assign(m, 0.0);

  if (cfg.cand_loss == CandLoss::ranking) {
    for (std::size_t j = 1; j < m; ++j) {
      const double hinge = cfg.alpha - (sc[0] - sc[j]);
      if (hinge > 0.0) {
        out.cand += hinge;
        if (g_cand != nullptr) {
          (*g_cand)[0] -= 1.0;
          (*g_cand)[j] += 1.0;
        }
      }
    }
  } else {
    out.cand = softmax_nll(sc, 0, g_cand != nullptr ? std::span<double>(*g_cand) : std::span<double>());
  }
  out.rerank = softmax_nll(sr, 0, g_rerank != nullptr ? std::span<double>(*g_rerank) : std::span<double>());
  return out;
}

void adam_update(std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
                 std::vector<double>& v, const TrainConfig& cfg, double lr, std::size_t t) {
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.adam_eps) + cfg.weight_decay * param[i]);
  }
}

double mean_abs_relaxed(Batch probe, const TwoTowerModel& model, double beta) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& inst : probe) {
    for (double v : encode_question(model, inst.question, beta).relaxed) sum += std::abs(v);
    for (double v : encode_passage(model, inst.positive, beta).relaxed) sum += std::abs(v);
    count += 2 * model.code_dims;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::uint64_t model_payload_bytes(const EnvelopeHeader& h) {
  const std::uint64_t in = h.dims;
  const std::uint64_t d = h.count;
  if (d > (UINT64_MAX / 16) / (in + 1)) return UINT64_MAX;
  return 2 * d * (in + 1) * 8;
}

}  // namespace

std::string_view to_string(CandLoss loss) noexcept {
  return loss == CandLoss::ranking ? "ranking" : "cross_entropy";
}

CandLoss parse_cand_loss(std::string_view text) {
  if (text == "ranking") return CandLoss::ranking;
  if (text == "cross_entropy") return CandLoss::cross_entropy;
  throw ValidationError("unknown candidate loss '" + std::string(text) + "'");
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.code_dims < 1) throw ConfigError("code_dims", "code_dims must be positive");
  if (cfg.batch_size < 1) throw ConfigError("batch_size", "batch_size must be positive");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw ConfigError("lr", "lr must be non-negative");
  if (!(cfg.warmup_ratio >= 0.0 && cfg.warmup_ratio <= 1.0)) throw ConfigError("warmup_ratio", "warmup_ratio must be in [0, 1]");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0)) throw ConfigError("adam_beta1", "adam_beta1 must be in [0, 1)");
  if (!(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) throw ConfigError("adam_beta2", "adam_beta2 must be in [0, 1)");
  if (!(cfg.adam_eps > 0.0)) throw ConfigError("adam_eps", "adam_eps must be positive");
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("weight_decay", "weight_decay must be non-negative");
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) throw ConfigError("gamma", "gamma must be positive");
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) throw ConfigError("alpha", "alpha must be non-negative");
  if (!(cfg.init_scale >= 0.0) || !std::isfinite(cfg.init_scale)) throw ConfigError("init_scale", "init_scale must be non-negative");
}

TwoTowerModel TwoTowerModel::zeros(std::size_t input_dims, std::size_t code_dims) {
  if (input_dims == 0 || code_dims == 0) throw ValidationError("model dimensions must be positive");
  TwoTowerModel m;
  m.input_dims = input_dims;
  m.code_dims = code_dims;
  m.question_weights.assign(code_dims * input_dims, 0.0);
  m.question_bias.assign(code_dims, 0.0);
  m.passage_weights.assign(code_dims * input_dims, 0.0);
  m.passage_bias.assign(code_dims, 0.0);
  return m;
}

TwoTowerModel TwoTowerModel::initialize(std::size_t input_dims, std::size_t code_dims, double init_scale,
                                        std::uint64_t seed) {
  TwoTowerModel m = zeros(input_dims, code_dims);
  std::mt19937_64 q_rng(derive_seed(seed, "init/question"));
  std::mt19937_64 p_rng(derive_seed(seed, "init/passage"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& w : m.question_weights) w = init_scale * normal(q_rng);
  normal.reset();
  for (double& w : m.passage_weights) w = init_scale * normal(p_rng);
  return m;
}

std::vector<double> TwoTowerModel::embed_question(std::span<const double> x) const {
  if (x.size() != input_dims) throw ValidationError("question features have wrong dimensionality");
  std::vector<double> out;
  affine(question_weights, question_bias, x, code_dims, out);
  return out;
}

std::vector<double> TwoTowerModel::embed_passage(std::span<const double> x) const {
  if (x.size() != input_dims) throw ValidationError("passage features have wrong dimensionality");
  std::vector<double> out;
  affine(passage_weights, passage_bias, x, code_dims, out);
  return out;
}

Encoded encode_question(const TwoTowerModel& model, std::span<const double> x, double beta) {
  Encoded out;
  out.embedding = model.embed_question(x);
  out.relaxed = scaled_tanh(out.embedding, beta);
  out.code = sign_hash(out.embedding);
  return out;
}

Encoded encode_passage(const TwoTowerModel& model, std::span<const double> x, double beta) {
  Encoded out;
  out.embedding = model.embed_passage(x);
  out.relaxed = scaled_tanh(out.embedding, beta);
  out.code = sign_hash(out.embedding);
  return out;
}

double loss_dpr(double positive, std::span<const double> negatives) { return nll_positive_first(positive, negatives); }

double loss_cand_ranking(double positive, std::span<const double> negatives, double alpha) {
  double loss = 0.0;
  for (double s : negatives) loss += std::max(0.0, alpha - (positive - s));
  return loss;
}

double loss_cand_cross_entropy(double positive, std::span<const double> negatives) {
  return nll_positive_first(positive, negatives);
}

double loss_rerank(double positive, std::span<const double> negatives) {
  return nll_positive_first(positive, negatives);
}

BatchScores score_batch(Batch batch, const TwoTowerModel& model, double beta, bool in_batch_negatives) {
  const Forward f = forward(batch, model, beta, in_batch_negatives);
  BatchScores s;
  s.questions = batch.size();
  s.passages = f.p_inputs.size();
  s.candidates = f.candidates;
  s.cand.resize(s.questions * s.passages);
  s.rerank.resize(s.questions * s.passages);
  s.dense.resize(s.questions * s.passages);
  for (std::size_t i = 0; i < s.questions; ++i) {
    for (std::size_t p = 0; p < s.passages; ++p) {
      s.cand[i * s.passages + p] = dot(f.row(f.hq, i), f.row(f.hp, p));
      s.rerank[i * s.passages + p] = dot(f.row(f.eq, i), f.row(f.hp, p));
      s.dense[i * s.passages + p] = dot(f.row(f.eq, i), f.row(f.ep, p));
    }
  }
  return s;
}

LossBreakdown loss_total(Batch batch, const TwoTowerModel& model, double beta, const TrainConfig& cfg) {
  const Forward f = forward(batch, model, beta, cfg.in_batch_negatives);
  double cand = 0.0;
  double rerank = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const QuestionLoss ql = question_loss(f, i, cfg, nullptr, nullptr);
    cand += ql.cand;
    rerank += ql.rerank;
  }
  const double n = static_cast<double>(batch.size());
  LossBreakdown out;
  out.cand = cand / n;
  out.rerank = rerank / n;
  out.total = out.cand + out.rerank;
  return out;
}

double loss_dpr_batch(Batch batch, const TwoTowerModel& model, const TrainConfig& cfg) {
  const Forward f = forward(batch, model, 1.0, cfg.in_batch_negatives);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& cands = f.candidates[i];
    std::vector<double> negs;
    for (std::size_t j = 1; j < cands.size(); ++j) negs.push_back(dot(f.row(f.eq, i), f.row(f.ep, cands[j])));
    sum += loss_dpr(dot(f.row(f.eq, i), f.row(f.ep, cands[0])), negs);
  }
  return sum / static_cast<double>(batch.size());
}

ModelGradients gradients(Batch batch, const TwoTowerModel& model, double beta, const TrainConfig& cfg,
                         LossTerms terms) {
  const Forward f = forward(batch, model, beta, cfg.in_batch_negatives);
  const std::size_t b = batch.size();
  const std::size_t d = f.d;
  const std::size_t in = model.input_dims;
  const std::size_t p_count = f.p_inputs.size();
  const double inv_b = 1.0 / static_cast<double>(b);
  const double w_cand = terms == LossTerms::rerank_only ? 0.0 : inv_b;
  const double w_rerank = terms == LossTerms::cand_only ? 0.0 : inv_b;

  std::vector<double> d_eq(b * d, 0.0);  // total d loss / d e_q
  std::vector<double> d_hq(b * d, 0.0);
  std::vector<double> d_hp(p_count * d, 0.0);

  double cand = 0.0;
  double rerank = 0.0;
  std::vector<double> g_cand, g_rerank;
  for (std::size_t i = 0; i < b; ++i) {
    const QuestionLoss ql = question_loss(f, i, cfg, &g_cand, &g_rerank);
    cand += ql.cand;
    rerank += ql.rerank;
    const auto hq = f.row(f.hq, i);
    const auto eq = f.row(f.eq, i);
    const auto& cands = f.candidates[i];
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const double gc = w_cand * g_cand[j];
      const double gr = w_rerank * g_rerank[j];
      if (gc == 0.0 && gr == 0.0) continue;
      const auto hp = f.row(f.hp, cands[j]);
      double* dhp = d_hp.data() + cands[j] * d;
      for (std::size_t r = 0; r < d; ++r) {
        d_hq[i * d + r] += gc * hp[r];
        d_eq[i * d + r] += gr * hp[r];
        dhp[r] += gc * hq[r] + gr * eq[r];
      }
    }
  }

  ModelGradients out;
  out.grad = TwoTowerModel::zeros(in, d);
  for (std::size_t i = 0; i < b; ++i) {
    const auto x = f.q_inputs[i];
    for (std::size_t r = 0; r < d; ++r) {
      const double h = f.hq[i * d + r];
      const double g = d_eq[i * d + r] + d_hq[i * d + r] * beta * (1.0 - h * h);
      if (g == 0.0) continue;
      out.grad.question_bias[r] += g;
      double* w = out.grad.question_weights.data() + r * in;
      for (std::size_t c = 0; c < in; ++c) w[c] += g * x[c];
    }
  }
  for (std::size_t j = 0; j < p_count; ++j) {
    const auto x = f.p_inputs[j];
    for (std::size_t r = 0; r < d; ++r) {
      const double h = f.hp[j * d + r];
      const double g = d_hp[j * d + r] * beta * (1.0 - h * h);
      if (g == 0.0) continue;
      out.grad.passage_bias[r] += g;
      double* w = out.grad.passage_weights.data() + r * in;
      for (std::size_t c = 0; c < in; ++c) w[c] += g * x[c];
    }
  }
  out.loss.cand = cand * inv_b;
  out.loss.rerank = rerank * inv_b;
  out.loss.total = out.loss.cand + out.loss.rerank;
  return out;
}

std::size_t warmup_steps(const TrainConfig& cfg, std::size_t total_steps) noexcept {
  return static_cast<std::size_t>(cfg.warmup_ratio * static_cast<double>(total_steps));
}

double learning_rate_at(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) noexcept {
  const std::size_t warmup = warmup_steps(cfg, total_steps);
  if (step < warmup) return cfg.lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (step >= total_steps) return 0.0;
  return cfg.lr * static_cast<double>(total_steps - step) / static_cast<double>(std::max<std::size_t>(1, total_steps - warmup));
}

TrainResult train(std::span<const TrainingInstance> dataset, const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (dataset.empty()) throw ValidationError("training dataset is empty");
  const std::size_t input_dims = dataset.front().input_dims();
  for (const auto& inst : dataset) {
    check_instance(inst);
    if (inst.input_dims() != input_dims) throw ValidationError("training instances have mixed input dims");
  }

  TrainResult result;
  result.model = TwoTowerModel::initialize(input_dims, cfg.code_dims, cfg.init_scale, cfg.seed);
  TwoTowerModel& model = result.model;

  const std::size_t n = dataset.size();
  const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches_per_epoch * cfg.epochs;
  const BetaSchedule schedule{cfg.gamma};
  const Batch probe = dataset.first(std::min(n, cfg.batch_size));

  TwoTowerModel m1 = TwoTowerModel::zeros(input_dims, cfg.code_dims);
  TwoTowerModel m2 = TwoTowerModel::zeros(input_dims, cfg.code_dims);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "train/shuffle"));
  std::vector<TrainingInstance> shuffled(n);
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = dataset[order[i]];
    LossBreakdown sum;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const Batch batch = Batch(shuffled).subspan(start, std::min(cfg.batch_size, n - start));
      const double beta = schedule.beta_at(step);
      const ModelGradients g = gradients(batch, model, beta, cfg);
      if (!std::isfinite(g.loss.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", step " << step << " (beta=" << beta
            << ", cand=" << g.loss.cand << ", rerank=" << g.loss.rerank << ")";
        throw TrainingError(msg.str());
      }
      const double lr = learning_rate_at(cfg, step, total_steps);
      result.beta_trace.push_back(beta);
      result.lr_trace.push_back(lr);
      const std::size_t t = step + 1;
      adam_update(model.question_weights, g.grad.question_weights, m1.question_weights, m2.question_weights, cfg, lr, t);
      adam_update(model.question_bias, g.grad.question_bias, m1.question_bias, m2.question_bias, cfg, lr, t);
      adam_update(model.passage_weights, g.grad.passage_weights, m1.passage_weights, m2.passage_weights, cfg, lr, t);
      adam_update(model.passage_bias, g.grad.passage_bias, m1.passage_bias, m2.passage_bias, cfg, lr, t);
      ++step;
      sum.cand += g.loss.cand;
      sum.rerank += g.loss.rerank;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.steps = step;
    stats.beta = schedule.beta_at(step);
    stats.loss_cand = sum.cand / static_cast<double>(batches_per_epoch);
    stats.loss_rerank = sum.rerank / static_cast<double>(batches_per_epoch);
    stats.loss_total = stats.loss_cand + stats.loss_rerank;
    stats.mean_abs_relaxed = mean_abs_relaxed(probe, model, stats.beta);
    result.epochs.push_back(stats);
  }
  return result;
}

void save_model(const TwoTowerModel& model, const std::filesystem::path& path) {
  std::vector<std::byte> payload;
  payload.reserve(model.parameter_count() * 8);
  for (const auto* part : {&model.question_weights, &model.question_bias, &model.passage_weights, &model.passage_bias}) {
    for (double v : *part) put_u64(payload, std::bit_cast<std::uint64_t>(v));
  }
  EnvelopeHeader header;
  header.magic = make_magic(kModelMagic);
  header.version = kModelVersion;
  header.dims = static_cast<std::uint32_t>(model.input_dims);
  header.count = model.code_dims;
  write_envelope(path, header, payload);
}

TwoTowerModel load_model(const std::filesystem::path& path) {
  Envelope env = read_envelope(path, kModelMagic, kModelVersion, &model_payload_bytes);
  if (env.header.dims == 0 || env.header.count == 0) {
    throw FormatError(FormatError::Kind::invalid_payload, path.string() + ": empty model");
  }
  TwoTowerModel model = TwoTowerModel::zeros(env.header.dims, env.header.count);
  std::span<const std::byte> bytes(env.payload);
  std::size_t offset = 0;
  for (auto* part : {&model.question_weights, &model.question_bias, &model.passage_weights, &model.passage_bias}) {
    for (double& v : *part) {
      v = std::bit_cast<double>(get_u64(bytes.subspan(offset)));
      offset += 8;
      if (!std::isfinite(v)) throw FormatError(FormatError::Kind::invalid_payload, path.string() + ": non-finite parameter");
    }
  }
  return model;
}

}  // namespace bpr
