// Copyright 2026 The cilab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cilab/methods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cilab/errors.hpp"

namespace cilab {

std::string_view to_string(MethodType type) {
  switch (type) {
    case MethodType::kER: return "er";
    case MethodType::kDER: return "der";
    case MethodType::kDERPP: return "derpp";
  }
  return "?";
}

MethodType parse_method(std::string_view s) {
  if (s == "er") return MethodType::kER;
  if (s == "der") return MethodType::kDER;
  if (s == "derpp") return MethodType::kDERPP;
  throw ConfigError("unknown method \"" + std::string(s) + "\" (expected er, der, derpp)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a positive finite number");
  if (per_class_budget < 1) throw ConfigError("per_class_budget must be >= 1");
  if (!(method.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(method.beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (!(ewc_strength >= 0.0)) throw ConfigError("ewc_lambda must be >= 0");
  if (!(si_strength >= 0.0)) throw ConfigError("si_c must be >= 0");
  if (!(si_damping > 0.0)) throw ConfigError("si_xi must be > 0");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("hidden layer widths must be >= 1");
  }
  regularizer.validate();
}

Batch make_batch(std::span<const Sample> samples) {
  return {stack_features(samples), collect_labels(samples), std::nullopt};
}

Batch make_batch(std::span<const BufferEntry> entries) {
  Batch b;
  const std::size_t dim = entries.empty() ? 0 : entries.front().features.size();
  b.features = Matrix(entries.size(), dim);
  const bool has_logits = !entries.empty() && entries.front().stored_logits.has_value();
  if (has_logits) b.stored_logits = Matrix(entries.size(), entries.front().stored_logits->size());
  for (std::size_t r = 0; r < entries.size(); ++r) {
    const auto& e = entries[r];
    std::copy(e.features.begin(), e.features.end(), b.features.row(r).begin());
    b.labels.push_back(e.label);
    if (has_logits) std::copy(e.stored_logits->begin(), e.stored_logits->end(), b.stored_logits->row(r).begin());
  }
  return b;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  total += o.total;
  ce_current += o.ce_current;
  ce_replay += o.ce_replay;
  distill += o.distill;
  reg += o.reg;
  return *this;
}

namespace {

// Forward pass of one batch plus the d(objective)/d(logits) accumulated so far.
struct Segment {
  const Batch* batch = nullptr;
  ForwardCache cache;
  PredictionBatch probs{Matrix()};
  Matrix upstream;
};

Segment make_segment(const MlpParams& params, const Batch& batch) {
  Segment s;
  s.batch = &batch;
  s.cache = forward(params, batch.features);
  s.probs = softmax(s.cache.logits);
  s.upstream = Matrix(s.cache.logits.rows(), s.cache.logits.cols());
  return s;
}

void add_scaled(Matrix& dst, double scale, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += scale * src.data()[i];
}

double add_ce(Segment& seg, double weight) {
  add_scaled(seg.upstream, weight, cross_entropy_grad(seg.probs, seg.batch->labels));
  return weight * cross_entropy(seg.probs, seg.batch->labels);
}

// Mean over all B x K entries of (logits - stored)^2.
double add_logit_mse(Segment& seg, double weight) {
  if (!seg.batch->stored_logits) throw ConfigError("logit distillation needs replay entries with stored logits");
  const Matrix& target = *seg.batch->stored_logits;
  const Matrix& z = seg.cache.logits;
  if (target.rows() != z.rows() || target.cols() != z.cols()) {
    throw ConfigError("stored logits do not match the model's output shape");
  }
  if (z.size() == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(z.size());
  double mse = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z.data()[i] - target.data()[i];
    mse += d * d;
    seg.upstream.data()[i] += weight * 2.0 * d * inv_n;
  }
  return weight * mse * inv_n;
}

// Supervised part of the objective, every term scaled by `weight`.
LossBreakdown supervised_terms(const MethodKind& method, double weight, Segment& current,
                               Segment* replay, Segment* replay_labels) {
  LossBreakdown out;
  out.ce_current = add_ce(current, weight);
  switch (method.type) {
    case MethodType::kER:
      if (replay) out.ce_replay = add_ce(*replay, weight);
      break;
    case MethodType::kDER:
      if (replay) out.distill = add_logit_mse(*replay, weight * method.alpha);
      break;
    case MethodType::kDERPP:
      if (replay) out.distill = add_logit_mse(*replay, weight * method.alpha);
      if (replay_labels) out.ce_replay = add_ce(*replay_labels, weight * method.beta);
      break;
  }
  return out;
}

double sum_terms(const LossBreakdown& b) { return b.ce_current + b.ce_replay + b.distill + b.reg; }

GradientSet backward_all(const MlpParams& params, std::initializer_list<Segment*> segments) {
  GradientSet grads = GradientSet::zeros_like(params);
  for (Segment* s : segments) {
    if (s) grads += backward(params, s->cache, s->upstream);
  }
  return grads;
}

struct Segments {
  Segment current;
  std::optional<Segment> replay;
  std::optional<Segment> replay_labels;

  Segments(const MlpParams& params, const Batch& cur, const std::optional<Batch>& rep,
           const std::optional<Batch>& rep_labels)
      : current(make_segment(params, cur)) {
    if (rep) replay = make_segment(params, *rep);
    if (rep_labels) replay_labels = make_segment(params, *rep_labels);
  }

  Segment* replay_ptr() { return replay ? &*replay : nullptr; }
  Segment* replay_labels_ptr() { return replay_labels ? &*replay_labels : nullptr; }
};

LossAndGrad method_loss(const MlpParams& params, const MethodKind& method, const Batch& current,
                        const std::optional<Batch>& replay, const std::optional<Batch>& replay_labels) {
  if (current.size() == 0) throw InputError("current batch is empty");
  Segments segs(params, current, replay, replay_labels);
  const LossBreakdown terms =
      supervised_terms(method, 1.0, segs.current, segs.replay_ptr(), segs.replay_labels_ptr());
  return {sum_terms(terms), backward_all(params, {&segs.current, segs.replay_ptr(), segs.replay_labels_ptr()})};
}

// Adds lambda * d(R)/d(logits) for a prediction-space regularizer evaluated on
// the concatenation of `targets`; returns R.
double add_prediction_regularizer(RegularizerType type, double lambda, std::span<Segment* const> targets) {
  Matrix stacked;
  for (const Segment* s : targets) stacked = vstack(stacked, s->probs.probs());
  if (stacked.rows() == 0) return 0.0;
  const PredictionBatch probs(std::move(stacked));
  const bool im = type == RegularizerType::kIM;
  const double value = im ? im_loss(probs) : em_loss(probs);
  const Matrix grad = im ? im_grad_wrt_logits(probs) : em_grad_wrt_logits(probs);
  std::size_t row = 0;
  for (Segment* s : targets) {
    const std::size_t n = s->upstream.rows();
    add_scaled(s->upstream, lambda, slice_rows(grad, row, row + n));
    row += n;
  }
  return value;
}

}  // namespace

LossAndGrad er_loss(const MlpParams& params, const Batch& current, const std::optional<Batch>& replay) {
  return method_loss(params, {MethodType::kER, 0.0, 0.0}, current, replay, std::nullopt);
}

LossAndGrad der_loss(const MlpParams& params, const Batch& current, const std::optional<Batch>& replay,
                     double alpha) {
  return method_loss(params, {MethodType::kDER, alpha, 0.0}, current, replay, std::nullopt);
}

LossAndGrad derpp_loss(const MlpParams& params, const Batch& current,
                       const std::optional<Batch>& replay_logits,
                       const std::optional<Batch>& replay_labels, double alpha, double beta) {
  return method_loss(params, {MethodType::kDERPP, alpha, beta}, current, replay_logits, replay_labels);
}

Learner Learner::create(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_classes) {
  cfg.validate();
  Rng rng(cfg.seed);
  MlpParams params = init_mlp(input_dim, cfg.hidden_dims, num_classes, rng);
  EwcState ewc;
  ewc.strength = cfg.ewc_strength;
  SiState si = SiState::init(params, cfg.si_strength, cfg.si_damping);
  ReplayBuffer buffer(cfg.per_class_budget, num_classes, cfg.method.stores_logits(),
                      mix64(cfg.seed ^ 0x6275666665725f73ULL));
  return {std::move(params), std::move(ewc), std::move(si), std::move(buffer), std::move(rng)};
}

LossBreakdown train_batch(Learner& learner, const TrainConfig& cfg, const Batch& current,
                          std::size_t task_index, const BatchObserver& observer) {
  if (current.size() == 0) throw InputError("train_batch: empty current batch");
  const RegularizerType reg_type = cfg.regularizer.type;
  const bool reg_configured = reg_type != RegularizerType::kNone;
  const double lambda = reg_configured ? cfg.regularizer.weight : 0.0;
  const double sup_weight = reg_configured ? 1.0 - lambda : 1.0;
  const bool reg_on = reg_configured && lambda > 0.0;

  // Replay draws depend only on the method, never on the regularizer.
  std::optional<Batch> replay;
  std::optional<Batch> replay_labels;
  if (auto drawn = learner.buffer.sample_batch(cfg.batch_size, learner.rng)) replay = make_batch(*drawn);
  if (cfg.method.type == MethodType::kDERPP && cfg.method.beta > 0.0) {
    if (auto drawn = learner.buffer.sample_batch(cfg.batch_size, learner.rng)) replay_labels = make_batch(*drawn);
  }

  const MlpParams& params = learner.params;
  Segments segs(params, current, replay, replay_labels);
  LossBreakdown loss =
      supervised_terms(cfg.method, sup_weight, segs.current, segs.replay_ptr(), segs.replay_labels_ptr());

  GradientSet param_space = GradientSet::zeros_like(params);
  if (reg_on) {
    double r = 0.0;
    switch (reg_type) {
      case RegularizerType::kIM:
      case RegularizerType::kEM: {
        std::vector<Segment*> targets;
        if (cfg.reg_target != RegTarget::kBuffer) targets.push_back(&segs.current);
        if (cfg.reg_target != RegTarget::kCurrent && segs.replay) targets.push_back(&*segs.replay);
        r = add_prediction_regularizer(reg_type, lambda, targets);
        break;
      }
      case RegularizerType::kEWC:
        r = ewc_penalty(params, learner.ewc);
        param_space = ewc_grad(params, learner.ewc);
        param_space *= lambda;
        break;
      case RegularizerType::kSI:
        r = si_penalty(params, learner.si);
        param_space = si_grad(params, learner.si);
        param_space *= lambda;
        break;
      case RegularizerType::kNone:
        break;
    }
    loss.reg = lambda * r;
  }
  loss.total = sum_terms(loss);

  GradientSet grads = backward_all(params, {&segs.current, segs.replay_ptr(), segs.replay_labels_ptr()});
  if (reg_on && (reg_type == RegularizerType::kEWC || reg_type == RegularizerType::kSI)) grads += param_space;

  if (!std::isfinite(loss.total) || !grads.all_finite()) {
    throw NumericError("non-finite loss or gradient while training task " + std::to_string(task_index));
  }
  if (observer) observer({params, current, replay, replay_labels, loss, task_index});

  MlpParams updated = sgd_step(learner.params, grads, cfg.lr);
  if (reg_type == RegularizerType::kSI) {
    learner.si = si_accumulate(std::move(learner.si), grads, learner.params, updated);
  }
  learner.params = std::move(updated);

  if (cfg.insert_at == InsertCadence::kBatch) {
    // Logits are those of the forward pass that produced this step.
    const Matrix& logits = segs.current.cache.logits;
    for (std::size_t r = 0; r < current.size(); ++r) {
      BufferEntry e;
      const auto f = current.features.row(r);
      e.features.assign(f.begin(), f.end());
      e.label = current.labels[r];
      if (learner.buffer.stores_logits()) {
        const auto z = logits.row(r);
        e.stored_logits = std::vector<double>(z.begin(), z.end());
      }
      e.insert_task = task_index;
      learner.buffer.insert(std::move(e));
    }
  }
  return loss;
}

std::vector<EpochLog> train_task(Learner& learner, const TrainConfig& cfg, const TaskSpec& task,
                                 const BatchObserver& observer) {
  std::vector<EpochLog> logs;
  const std::size_t n = task.train.size();
  std::vector<std::size_t> order(n);
  std::vector<Sample> chunk;
  for (std::size_t epoch = 0; epoch < cfg.epochs_per_task; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[learner.rng.uniform_index(i)]);

    EpochLog log{task.task_index, epoch, {}};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      chunk.clear();
      for (std::size_t k = start; k < end; ++k) chunk.push_back(task.train[order[k]]);
      log.mean += train_batch(learner, cfg, make_batch(chunk), task.task_index, observer);
      ++batches;
    }
    if (batches > 0) {
      const double inv = 1.0 / static_cast<double>(batches);
      log.mean.total *= inv;
      log.mean.ce_current *= inv;
      log.mean.ce_replay *= inv;
      log.mean.distill *= inv;
      log.mean.reg *= inv;
    }
    logs.push_back(log);
  }

  if (cfg.regularizer.type == RegularizerType::kEWC) {
    learner.ewc = ewc_consolidate(learner.params, task.train, std::move(learner.ewc));
  }
  if (cfg.regularizer.type == RegularizerType::kSI) {
    learner.si = si_consolidate(std::move(learner.si), learner.params);
  }
  if (cfg.insert_at == InsertCadence::kTaskEnd && n > 0) {
    const auto cache = forward(learner.params, stack_features(task.train));
    for (std::size_t r = 0; r < n; ++r) {
      BufferEntry e{task.train[r].features, task.train[r].label, std::nullopt, task.task_index};
      if (learner.buffer.stores_logits()) {
        const auto z = cache.logits.row(r);
        e.stored_logits = std::vector<double>(z.begin(), z.end());
      }
      learner.buffer.insert(std::move(e));
    }
  }
  return logs;
}

double evaluate_accuracy(const MlpParams& params, std::span<const Sample> samples) {
  if (samples.empty()) throw InputError("evaluate_accuracy: no samples");
  const auto cache = forward(params, stack_features(samples));
  if (!cache.logits.all_finite()) throw NumericError("evaluate_accuracy: non-finite logits");
  const auto pred = argmax_rows(cache.logits);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (pred[r] == static_cast<std::size_t>(samples[r].label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

RunResult run_sequence(const TaskStream& stream, const TrainConfig& cfg, const BatchObserver& observer) {
  validate_stream(stream);
  if (stream.tasks.empty()) throw InputError("run_sequence: stream has no tasks");
  Learner learner = Learner::create(cfg, stream.dim, stream.num_classes);
  RunResult result{AccuracyMatrix(stream.num_tasks()), {}, {}};
  for (std::size_t j = 0; j < stream.num_tasks(); ++j) {
    auto logs = train_task(learner, cfg, stream.tasks[j], observer);
    result.logs.insert(result.logs.end(), logs.begin(), logs.end());
    for (std::size_t i = 0; i <= j; ++i) {
      result.accuracy.set(i, j, evaluate_accuracy(learner.params, stream.tasks[i].test));
    }
  }
  result.final_params = std::move(learner.params);
  return result;
}

}  // namespace cilab
