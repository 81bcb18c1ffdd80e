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

#include "cilab/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cilab/errors.hpp"

namespace cilab {

void RegularizerKind::validate() const {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw ConfigError("regularizer weight lambda must lie in [0, 1], got " + std::to_string(weight));
  }
}

std::string_view to_string(RegTarget target) {
  switch (target) {
    case RegTarget::kCurrent: return "ct";
    case RegTarget::kBuffer: return "bf";
    case RegTarget::kAll: return "all";
  }
  return "?";
}

std::string_view to_string(RegularizerType type) {
  switch (type) {
    case RegularizerType::kNone: return "none";
    case RegularizerType::kIM: return "im";
    case RegularizerType::kEM: return "em";
    case RegularizerType::kEWC: return "ewc";
    case RegularizerType::kSI: return "si";
  }
  return "?";
}

RegTarget parse_reg_target(std::string_view s) {
  if (s == "ct") return RegTarget::kCurrent;
  if (s == "bf") return RegTarget::kBuffer;
  if (s == "all") return RegTarget::kAll;
  throw ConfigError("unknown regularization target \"" + std::string(s) + "\" (expected ct, bf, all)");
}

RegularizerType parse_regularizer(std::string_view s) {
  if (s == "none") return RegularizerType::kNone;
  if (s == "im") return RegularizerType::kIM;
  if (s == "em") return RegularizerType::kEM;
  if (s == "ewc") return RegularizerType::kEWC;
  if (s == "si") return RegularizerType::kSI;
  throw ConfigError("unknown regularizer \"" + std::string(s) + "\" (expected none, im, em, ewc, si)");
}

namespace {

double row_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) h -= v * clamped_log(v);
  return h;
}

std::vector<double> mean_prediction(const PredictionBatch& probs) {
  std::vector<double> mean(probs.num_classes(), 0.0);
  for (std::size_t r = 0; r < probs.batch_size(); ++r) {
    const auto row = probs.probs().row(r);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
  }
  for (double& m : mean) m /= static_cast<double>(probs.batch_size());
  return mean;
}

}  // namespace

double entropy_term(const PredictionBatch& probs) {
  if (probs.batch_size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < probs.batch_size(); ++r) total += row_entropy(probs.probs().row(r));
  return total / static_cast<double>(probs.batch_size());
}

double diversity_term(const PredictionBatch& probs) {
  if (probs.batch_size() == 0) return 0.0;
  return -row_entropy(mean_prediction(probs));
}

double im_loss(const PredictionBatch& probs) { return entropy_term(probs) + diversity_term(probs); }

double em_loss(const PredictionBatch& probs) { return entropy_term(probs); }

Matrix entropy_grad_wrt_logits(const PredictionBatch& probs) {
  // For one row, dH/dz_j = -p_j (log p_j + H).
  Matrix g(probs.batch_size(), probs.num_classes());
  if (probs.batch_size() == 0) return g;
  const double inv_b = 1.0 / static_cast<double>(probs.batch_size());
  for (std::size_t r = 0; r < probs.batch_size(); ++r) {
    const auto p = probs.probs().row(r);
    const double h = row_entropy(p);
    auto gr = g.row(r);
    for (std::size_t j = 0; j < p.size(); ++j) gr[j] = -p[j] * (clamped_log(p[j]) + h) * inv_b;
  }
  return g;
}

Matrix diversity_grad_wrt_logits(const PredictionBatch& probs) {
  // With m the batch mean: dD/dz_ij = p_ij (log m_j - sum_k p_ik log m_k) / B.
  Matrix g(probs.batch_size(), probs.num_classes());
  if (probs.batch_size() == 0) return g;
  const double inv_b = 1.0 / static_cast<double>(probs.batch_size());
  std::vector<double> log_mean = mean_prediction(probs);
  for (double& m : log_mean) m = clamped_log(m);
  for (std::size_t r = 0; r < probs.batch_size(); ++r) {
    const auto p = probs.probs().row(r);
    double expected = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) expected += p[k] * log_mean[k];
    auto gr = g.row(r);
    for (std::size_t j = 0; j < p.size(); ++j) gr[j] = p[j] * (log_mean[j] - expected) * inv_b;
  }
  return g;
}

Matrix im_grad_wrt_logits(const PredictionBatch& probs) {
  Matrix g = entropy_grad_wrt_logits(probs);
  const Matrix d = diversity_grad_wrt_logits(probs);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += d.data()[i];
  return g;
}

Matrix em_grad_wrt_logits(const PredictionBatch& probs) { return entropy_grad_wrt_logits(probs); }

namespace {

void check_congruent(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw ConfigError(std::string(what) + ": state has " + std::to_string(actual) +
                      " entries, model has " + std::to_string(expected) + " parameters");
  }
}

}  // namespace

double ewc_penalty(const MlpParams& params, const EwcState& state) {
  if (!state.consolidated()) return 0.0;
  const auto theta = flatten(params);
  check_congruent(theta.size(), state.anchor.size(), "ewc");
  check_congruent(theta.size(), state.fisher.size(), "ewc");
  double total = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - state.anchor[i];
    total += 0.5 * state.strength * state.fisher[i] * d * d;
  }
  return total;
}

GradientSet ewc_grad(const MlpParams& params, const EwcState& state) {
  if (!state.consolidated()) return GradientSet::zeros_like(params);
  const auto theta = flatten(params);
  check_congruent(theta.size(), state.anchor.size(), "ewc");
  check_congruent(theta.size(), state.fisher.size(), "ewc");
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    g[i] = state.strength * state.fisher[i] * (theta[i] - state.anchor[i]);
  }
  return gradient_from_flat(params, g);
}

std::vector<double> empirical_fisher(const MlpParams& params, std::span<const Sample> samples) {
  if (samples.empty()) throw InputError("empirical_fisher: no samples");
  std::vector<double> fisher(params.parameter_count(), 0.0);
  for (const auto& s : samples) {
    const Matrix x(1, s.features.size(), s.features);
    const auto cache = forward(params, x);
    const auto probs = softmax(cache.logits);
    const Label y[1] = {s.label};
    // d(-log p_y)/d theta; the square is sign-independent.
    const auto g = flatten(backward(params, cache, cross_entropy_grad(probs, y)));
    for (std::size_t i = 0; i < g.size(); ++i) fisher[i] += g[i] * g[i];
  }
  for (double& f : fisher) f /= static_cast<double>(samples.size());
  return fisher;
}

EwcState ewc_consolidate(const MlpParams& params, std::span<const Sample> task_data, EwcState state) {
  if (task_data.empty()) throw InputError("ewc_consolidate: empty task data");
  const auto increment = empirical_fisher(params, task_data);
  if (state.fisher.empty()) state.fisher.assign(increment.size(), 0.0);
  check_congruent(increment.size(), state.fisher.size(), "ewc");
  for (std::size_t i = 0; i < increment.size(); ++i) state.fisher[i] += increment[i];
  state.anchor = flatten(params);
  return state;
}

SiState SiState::init(const MlpParams& params, double strength, double damping) {
  if (!(damping > 0.0)) throw ConfigError("si: damping xi must be positive");
  SiState s;
  s.ref_params = flatten(params);
  s.task_start_params = s.ref_params;
  s.omega.assign(s.ref_params.size(), 0.0);
  s.importance.assign(s.ref_params.size(), 0.0);
  s.damping = damping;
  s.strength = strength;
  return s;
}

SiState si_accumulate(SiState state, const GradientSet& grads, const MlpParams& prev_params,
                      const MlpParams& new_params) {
  const auto g = flatten(grads);
  const auto prev = flatten(prev_params);
  const auto next = flatten(new_params);
  check_congruent(g.size(), state.omega.size(), "si");
  check_congruent(g.size(), prev.size(), "si");
  check_congruent(g.size(), next.size(), "si");
  for (std::size_t k = 0; k < g.size(); ++k) state.omega[k] += -g[k] * (next[k] - prev[k]);
  return state;
}

SiState si_consolidate(SiState state, const MlpParams& params_at_task_end) {
  const auto end = flatten(params_at_task_end);
  check_congruent(end.size(), state.omega.size(), "si");
  for (std::size_t k = 0; k < end.size(); ++k) {
    const double delta = end[k] - state.task_start_params[k];
    state.importance[k] += std::max(0.0, state.omega[k]) / (delta * delta + state.damping);
    state.omega[k] = 0.0;
  }
  state.ref_params = end;
  state.task_start_params = end;
  return state;
}

double si_penalty(const MlpParams& params, const SiState& state) {
  const auto theta = flatten(params);
  check_congruent(theta.size(), state.importance.size(), "si");
  double total = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double d = theta[k] - state.ref_params[k];
    total += state.importance[k] * d * d;
  }
  return state.strength * total;
}

GradientSet si_grad(const MlpParams& params, const SiState& state) {
  const auto theta = flatten(params);
  check_congruent(theta.size(), state.importance.size(), "si");
  std::vector<double> g(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    g[k] = 2.0 * state.strength * state.importance[k] * (theta[k] - state.ref_params[k]);
  }
  return gradient_from_flat(params, g);
}

}  // namespace cilab
