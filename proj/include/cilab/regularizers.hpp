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

#include <span>
#include <string_view>
#include <vector>

#include "cilab/matrix.hpp"
#include "cilab/mlp.hpp"
#include "cilab/streams.hpp"

namespace cilab {

// Which samples a prediction-space regularizer (IM, EM) is evaluated on.
enum class RegTarget {
  kCurrent,  // current-task batch ("ct")
  kBuffer,   // replay batch ("bf")
  kAll,      // both, concatenated ("all")
};

enum class RegularizerType { kNone, kIM, kEM, kEWC, kSI };

struct RegularizerKind {
  RegularizerType type = RegularizerType::kNone;
  double weight = 0.5;  // lambda: total = (1 - lambda) * supervised + lambda * R

  // Throws ConfigError unless weight lies in [0, 1].
  void validate() const;
};

std::string_view to_string(RegTarget target);
std::string_view to_string(RegularizerType type);
RegTarget parse_reg_target(std::string_view s);
RegularizerType parse_regularizer(std::string_view s);

// --- Prediction-space terms. All take mean-over-batch expectations and use
// natural logs with the kProbEpsilon clamp. Gradients are with respect to the
// logits that produced `probs`.

// Mean per-sample Shannon entropy, in [0, ln K].
double entropy_term(const PredictionBatch& probs);
// Negative entropy of the batch-mean prediction, in [-ln K, 0].
double diversity_term(const PredictionBatch& probs);
// entropy_term + diversity_term: the negated mutual information between
// inputs and predicted labels, estimated on this batch.
double im_loss(const PredictionBatch& probs);
double em_loss(const PredictionBatch& probs);

Matrix entropy_grad_wrt_logits(const PredictionBatch& probs);
// Couples all rows through the batch-mean prediction.
Matrix diversity_grad_wrt_logits(const PredictionBatch& probs);
Matrix im_grad_wrt_logits(const PredictionBatch& probs);
Matrix em_grad_wrt_logits(const PredictionBatch& probs);

// --- Elastic weight consolidation.
struct EwcState {
  std::vector<double> anchor;  // flat parameters at the last task boundary
  std::vector<double> fisher;  // accumulated diagonal Fisher, >= 0
  double strength = 1.0;

  bool consolidated() const { return !anchor.empty(); }
};

// sum_i (strength / 2) * F_i * (theta_i - anchor_i)^2; zero before the first
// consolidation.
double ewc_penalty(const MlpParams& params, const EwcState& state);
GradientSet ewc_grad(const MlpParams& params, const EwcState& state);

// Diagonal empirical Fisher: mean over samples of (d log p_y / d theta_i)^2.
std::vector<double> empirical_fisher(const MlpParams& params, std::span<const Sample> samples);

// anchor <- theta; fisher <- fisher + empirical_fisher(task_data).
// Throws InputError on empty task data.
EwcState ewc_consolidate(const MlpParams& params, std::span<const Sample> task_data, EwcState state);

// --- Synaptic intelligence.
struct SiState {
  std::vector<double> omega;        // running path integral for the current task
  std::vector<double> importance;   // consolidated Omega, >= 0
  std::vector<double> ref_params;   // anchor of the quadratic penalty
  std::vector<double> task_start_params;
  double damping = 0.1;   // xi
  double strength = 1.0;  // c

  static SiState init(const MlpParams& params, double strength, double damping);
};

// omega_k <- omega_k - g_k * (new_k - prev_k)
SiState si_accumulate(SiState state, const GradientSet& grads, const MlpParams& prev_params,
                      const MlpParams& new_params);
// importance_k += max(0, omega_k) / ((end_k - start_k)^2 + xi); omega <- 0;
// ref and task start <- end.
SiState si_consolidate(SiState state, const MlpParams& params_at_task_end);
// c * sum_k Omega_k * (theta_k - ref_k)^2
double si_penalty(const MlpParams& params, const SiState& state);
GradientSet si_grad(const MlpParams& params, const SiState& state);

}  // namespace cilab
