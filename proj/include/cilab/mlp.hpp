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
#include <span>
#include <vector>

#include "cilab/matrix.hpp"
#include "cilab/random.hpp"

namespace cilab {

using Label = std::int32_t;

// Probability floor inside every log.
inline constexpr double kProbEpsilon = 1e-12;

double clamped_log(double p);

enum class Activation { kRelu };

// One affine layer: out = in * weight + bias, weight is (fan_in x fan_out).
struct LayerParams {
  Matrix weight;
  std::vector<double> bias;

  bool operator==(const LayerParams&) const = default;
};

// Parameters of a ReLU MLP mapping input_dim features onto num_classes logits.
struct MlpParams {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t num_classes = 0;
  Activation activation = Activation::kRelu;
  std::vector<LayerParams> layers;

  std::size_t parameter_count() const;
  // Throws ConfigError if the layer chain is inconsistent, NumericError if any
  // parameter is non-finite.
  void validate() const;

  bool operator==(const MlpParams&) const = default;
};

// Glorot-uniform weights, zero biases.
MlpParams init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                   std::size_t num_classes, Rng& rng);

struct ForwardCache {
  // activations[0] is the input batch; activations[l + 1] = relu(pre_activations[l])
  // for every hidden layer l.
  std::vector<Matrix> activations;
  std::vector<Matrix> pre_activations;
  Matrix logits;  // B x K
};

// Row-stochastic matrix: every row lies on the probability simplex.
class PredictionBatch {
 public:
  // Validates the simplex invariant (rows sum to 1 within 1e-6, entries in [0, 1]).
  explicit PredictionBatch(Matrix probs);

  const Matrix& probs() const { return probs_; }
  std::size_t batch_size() const { return probs_.rows(); }
  std::size_t num_classes() const { return probs_.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return probs_(r, c); }

 private:
  Matrix probs_;
};

// Same layout as MlpParams::layers, holding d(loss)/d(parameter).
struct GradientSet {
  std::vector<LayerParams> layers;

  static GradientSet zeros_like(const MlpParams& params);

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double s);
  bool all_finite() const;
  bool operator==(const GradientSet&) const = default;
};

ForwardCache forward(const MlpParams& params, const Matrix& batch);

// Row-wise softmax with max subtraction. Throws NumericError on non-finite logits.
PredictionBatch softmax(const Matrix& logits);

// Mean over the batch of -log p[label], probabilities clamped to [eps, 1].
double cross_entropy(const PredictionBatch& probs, std::span<const Label> labels);
// Gradient of cross_entropy with respect to the logits: (p - onehot) / B.
Matrix cross_entropy_grad(const PredictionBatch& probs, std::span<const Label> labels);

// Exact reverse-mode gradients given d(loss)/d(logits).
GradientSet backward(const MlpParams& params, const ForwardCache& cache, const Matrix& upstream);

// theta <- theta - lr * g. Throws NumericError on a non-finite gradient.
MlpParams sgd_step(MlpParams params, const GradientSet& grads, double lr);

std::vector<std::size_t> argmax_rows(const Matrix& m);

// Flat views of the parameter vector in layer order (weights row-major, then bias).
std::vector<double> flatten(const MlpParams& params);
std::vector<double> flatten(const GradientSet& grads);
void assign_flat(MlpParams& params, std::span<const double> flat);
GradientSet gradient_from_flat(const MlpParams& shape, std::span<const double> flat);

}  // namespace cilab
