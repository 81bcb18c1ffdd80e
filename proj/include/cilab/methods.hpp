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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cilab/buffer.hpp"
#include "cilab/matrix.hpp"
#include "cilab/metrics.hpp"
#include "cilab/mlp.hpp"
#include "cilab/random.hpp"
#include "cilab/regularizers.hpp"
#include "cilab/streams.hpp"

namespace cilab {

enum class MethodType { kER, kDER, kDERPP };

struct MethodKind {
  MethodType type = MethodType::kER;
  double alpha = 0.3;  // logit distillation weight (DER, DER++)
  double beta = 0.5;   // replay cross-entropy weight (DER++ only)

  bool stores_logits() const { return type != MethodType::kER; }
};

std::string_view to_string(MethodType type);
MethodType parse_method(std::string_view s);

struct TrainConfig {
  std::size_t epochs_per_task = 5;
  std::size_t batch_size = 32;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_dims{64};
  MethodKind method;
  RegularizerKind regularizer;
  RegTarget reg_target = RegTarget::kCurrent;
  std::size_t per_class_budget = 5;
  InsertCadence insert_at = InsertCadence::kBatch;
  double ewc_strength = 1.0;  // lambda_ewc
  double si_strength = 1.0;   // c
  double si_damping = 0.1;    // xi

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// A mini-batch in matrix form. stored_logits is set for replay batches drawn
// from a logit-storing buffer.
struct Batch {
  Matrix features;
  std::vector<Label> labels;
  std::optional<Matrix> stored_logits;

  std::size_t size() const { return labels.size(); }
};

Batch make_batch(std::span<const Sample> samples);
Batch make_batch(std::span<const BufferEntry> entries);

struct LossAndGrad {
  double value = 0.0;
  GradientSet grads;
};

// CE(current) + CE(replay); the replay term is dropped when no replay batch exists.
LossAndGrad er_loss(const MlpParams& params, const Batch& current, const std::optional<Batch>& replay);
// CE(current) + alpha * MSE(logits(replay), stored logits).
LossAndGrad der_loss(const MlpParams& params, const Batch& current, const std::optional<Batch>& replay,
                     double alpha);
// CE(current) + alpha * MSE on replay_logits + beta * CE(replay_labels).
LossAndGrad derpp_loss(const MlpParams& params, const Batch& current,
                       const std::optional<Batch>& replay_logits,
                       const std::optional<Batch>& replay_labels, double alpha, double beta);

// Weighted contributions to one step's objective; they sum to `total`.
struct LossBreakdown {
  double total = 0.0;
  double ce_current = 0.0;
  double ce_replay = 0.0;
  double distill = 0.0;
  double reg = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
};

// Everything a training run mutates.
struct Learner {
  MlpParams params;
  EwcState ewc;
  SiState si;
  ReplayBuffer buffer;
  Rng rng;

  static Learner create(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_classes);
};

// Snapshot handed to an observer just before the SGD step of each batch.
struct BatchContext {
  const MlpParams& params;
  const Batch& current;
  const std::optional<Batch>& replay;         // ER/DER replay, DER++ logit replay
  const std::optional<Batch>& replay_labels;  // DER++ label replay
  const LossBreakdown& loss;
  std::size_t task = 0;
};
using BatchObserver = std::function<void(const BatchContext&)>;

// One regularized rehearsal step:
//   total = (1 - lambda) * method_loss + lambda * R(target)
// (method_loss alone when no regularizer is configured), followed by one SGD
// step, the SI path update and streaming buffer insertion.
// Throws NumericError if the loss or gradient is not finite.
LossBreakdown train_batch(Learner& learner, const TrainConfig& cfg, const Batch& current,
                          std::size_t task_index, const BatchObserver& observer = {});

struct EpochLog {
  std::size_t task = 0;
  std::size_t epoch = 0;
  LossBreakdown mean;  // averaged over the epoch's batches
};

// Shuffled epochs over the task's training data, then the task-boundary hooks.
std::vector<EpochLog> train_task(Learner& learner, const TrainConfig& cfg, const TaskSpec& task,
                                 const BatchObserver& observer = {});

// Fraction of samples whose argmax prediction equals the label.
double evaluate_accuracy(const MlpParams& params, std::span<const Sample> samples);

struct RunResult {
  AccuracyMatrix accuracy;
  MlpParams final_params;
  std::vector<EpochLog> logs;
};

// Trains on every task in order; after task j evaluates tasks 0..j.
RunResult run_sequence(const TaskStream& stream, const TrainConfig& cfg,
                       const BatchObserver& observer = {});

}  // namespace cilab
