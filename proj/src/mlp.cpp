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

#include "cilab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cilab/errors.hpp"

namespace cilab {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

double clamped_log(double p) { return std::log(std::clamp(p, kProbEpsilon, 1.0)); }

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.size() != hidden_dims.size() + 1) {
    throw ConfigError("mlp: expected " + std::to_string(hidden_dims.size() + 1) +
                      " layers, found " + std::to_string(layers.size()));
  }
  std::size_t fan_in = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t fan_out = l < hidden_dims.size() ? hidden_dims[l] : num_classes;
    const auto& layer = layers[l];
    if (layer.weight.rows() != fan_in || layer.weight.cols() != fan_out ||
        layer.bias.size() != fan_out) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " has weight " +
                        shape_str(layer.weight.rows(), layer.weight.cols()) + ", expected " +
                        shape_str(fan_in, fan_out));
    }
    if (!layer.weight.all_finite() ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), [](double v) { return std::isfinite(v); })) {
      throw NumericError("mlp: non-finite parameter in layer " + std::to_string(l));
    }
    fan_in = fan_out;
  }
}

MlpParams init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                   std::size_t num_classes, Rng& rng) {
  if (input_dim == 0 || num_classes == 0) throw ConfigError("mlp: dimensions must be positive");
  MlpParams params;
  params.input_dim = input_dim;
  params.hidden_dims.assign(hidden_dims.begin(), hidden_dims.end());
  params.num_classes = num_classes;

  std::size_t fan_in = input_dim;
  for (std::size_t l = 0; l <= hidden_dims.size(); ++l) {
    const std::size_t fan_out = l < hidden_dims.size() ? hidden_dims[l] : num_classes;
    if (fan_out == 0) throw ConfigError("mlp: hidden width must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    LayerParams layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
    for (double& w : layer.weight.data()) w = rng.uniform(-limit, limit);
    params.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return params;
}

PredictionBatch::PredictionBatch(Matrix probs) : probs_(std::move(probs)) {
  for (std::size_t r = 0; r < probs_.rows(); ++r) {
    double sum = 0.0;
    for (double p : probs_.row(r)) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw NumericError("prediction row " + std::to_string(r) + " has entry outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw NumericError("prediction row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
  }
}

GradientSet GradientSet::zeros_like(const MlpParams& params) {
  GradientSet g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    g.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                        std::vector<double>(layer.bias.size(), 0.0)});
  }
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.layers.size() != layers.size()) throw ConfigError("gradient sets are not congruent");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l].weight.data();
    const auto& ow = other.layers[l].weight.data();
    auto& b = layers[l].bias;
    const auto& ob = other.layers[l].bias;
    if (w.size() != ow.size() || b.size() != ob.size()) {
      throw ConfigError("gradient sets are not congruent");
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += ow[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += ob[i];
  }
  return *this;
}

GradientSet& GradientSet::operator*=(double s) {
  for (auto& layer : layers) {
    for (double& v : layer.weight.data()) v *= s;
    for (double& v : layer.bias) v *= s;
  }
  return *this;
}

bool GradientSet::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.all_finite()) return false;
    for (double v : layer.bias) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ForwardCache forward(const MlpParams& params, const Matrix& batch) {
  if (batch.cols() != params.input_dim) {
    throw ConfigError("forward: batch has " + std::to_string(batch.cols()) +
                      " features, model expects " + std::to_string(params.input_dim));
  }
  ForwardCache cache;
  cache.activations.push_back(batch);
  const std::size_t n = batch.rows();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const Matrix& in = cache.activations.back();
    Matrix z(n, layer.weight.cols());
    for (std::size_t r = 0; r < n; ++r) {
      auto zr = z.row(r);
      std::copy(layer.bias.begin(), layer.bias.end(), zr.begin());
      for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
        const double a = in(r, i);
        if (a == 0.0) continue;
        const auto wi = layer.weight.row(i);
        for (std::size_t o = 0; o < zr.size(); ++o) zr[o] += a * wi[o];
      }
    }
    if (l + 1 == params.layers.size()) {
      cache.logits = std::move(z);
    } else {
      Matrix act = z;
      for (double& v : act.data()) v = std::max(v, 0.0);
      cache.pre_activations.push_back(std::move(z));
      cache.activations.push_back(std::move(act));
    }
  }
  return cache;
}

PredictionBatch softmax(const Matrix& logits) {
  if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto out = probs.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      out[k] = std::exp(in[k] - mx);
      sum += out[k];
    }
    for (double& p : out) p /= sum;
  }
  return PredictionBatch(std::move(probs));
}

namespace {

void check_labels(const PredictionBatch& probs, std::span<const Label> labels) {
  if (labels.size() != probs.batch_size()) {
    throw InputError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(probs.batch_size()));
  }
  for (Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= probs.num_classes()) {
      throw InputError("cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(probs.num_classes()) + ")");
    }
  }
}

}  // namespace

double cross_entropy(const PredictionBatch& probs, std::span<const Label> labels) {
  check_labels(probs, labels);
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    total -= clamped_log(probs(r, static_cast<std::size_t>(labels[r])));
  }
  return total / static_cast<double>(labels.size());
}

Matrix cross_entropy_grad(const PredictionBatch& probs, std::span<const Label> labels) {
  check_labels(probs, labels);
  Matrix g = probs.probs();
  if (labels.empty()) return g;
  const double inv_b = 1.0 / static_cast<double>(labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    g(r, static_cast<std::size_t>(labels[r])) -= 1.0;
    for (double& v : g.row(r)) v *= inv_b;
  }
  return g;
}

GradientSet backward(const MlpParams& params, const ForwardCache& cache, const Matrix& upstream) {
  if (upstream.rows() != cache.logits.rows() || upstream.cols() != cache.logits.cols()) {
    throw ConfigError("backward: upstream is " + shape_str(upstream.rows(), upstream.cols()) +
                      ", logits are " + shape_str(cache.logits.rows(), cache.logits.cols()));
  }
  GradientSet grads = GradientSet::zeros_like(params);
  Matrix delta = upstream;  // d(loss)/d(pre-activation) of the current layer
  const std::size_t n = upstream.rows();
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    const Matrix& in = cache.activations[l];
    auto& gw = grads.layers[l].weight;
    auto& gb = grads.layers[l].bias;
    for (std::size_t r = 0; r < n; ++r) {
      const auto dr = delta.row(r);
      for (std::size_t o = 0; o < dr.size(); ++o) gb[o] += dr[o];
      for (std::size_t i = 0; i < in.cols(); ++i) {
        const double a = in(r, i);
        if (a == 0.0) continue;
        auto gwi = gw.row(i);
        for (std::size_t o = 0; o < dr.size(); ++o) gwi[o] += a * dr[o];
      }
    }
    if (l == 0) break;
    const Matrix& pre = cache.pre_activations[l - 1];
    Matrix prev(n, layer.weight.rows());
    for (std::size_t r = 0; r < n; ++r) {
      const auto dr = delta.row(r);
      auto pr = prev.row(r);
      for (std::size_t i = 0; i < pr.size(); ++i) {
        if (pre(r, i) <= 0.0) continue;
        const auto wi = layer.weight.row(i);
        double s = 0.0;
        for (std::size_t o = 0; o < dr.size(); ++o) s += wi[o] * dr[o];
        pr[i] = s;
      }
    }
    delta = std::move(prev);
  }
  return grads;
}

MlpParams sgd_step(MlpParams params, const GradientSet& grads, double lr) {
  if (!(lr >= 0.0)) throw ConfigError("sgd_step: learning rate must be non-negative");
  if (!grads.all_finite()) throw NumericError("sgd_step: non-finite gradient");
  if (grads.layers.size() != params.layers.size()) throw ConfigError("sgd_step: gradient shape mismatch");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& w = params.layers[l].weight.data();
    const auto& gw = grads.layers[l].weight.data();
    auto& b = params.layers[l].bias;
    const auto& gb = grads.layers[l].bias;
    if (w.size() != gw.size() || b.size() != gb.size()) {
      throw ConfigError("sgd_step: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
  return params;
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

namespace {

template <typename Layers>
std::vector<double> flatten_layers(const Layers& layers) {
  std::vector<double> flat;
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weight.data().begin(), layer.weight.data().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

template <typename Layers>
void assign_layers(Layers& layers, std::span<const double> flat) {
  std::size_t pos = 0;
  for (auto& layer : layers) {
    for (double& v : layer.weight.data()) {
      if (pos >= flat.size()) throw ConfigError("flat parameter vector too short");
      v = flat[pos++];
    }
    for (double& v : layer.bias) {
      if (pos >= flat.size()) throw ConfigError("flat parameter vector too short");
      v = flat[pos++];
    }
  }
  if (pos != flat.size()) throw ConfigError("flat parameter vector too long");
}

}  // namespace

std::vector<double> flatten(const MlpParams& params) { return flatten_layers(params.layers); }
std::vector<double> flatten(const GradientSet& grads) { return flatten_layers(grads.layers); }

void assign_flat(MlpParams& params, std::span<const double> flat) { assign_layers(params.layers, flat); }

GradientSet gradient_from_flat(const MlpParams& shape, std::span<const double> flat) {
  GradientSet g = GradientSet::zeros_like(shape);
  assign_layers(g.layers, flat);
  return g;
}

}  // namespace cilab
