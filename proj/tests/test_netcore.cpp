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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <numeric>

#include "cilab/errors.hpp"
#include "cilab/mlp.hpp"
#include "test_support.hpp"

using namespace cilab;
using testsupport::random_matrix;
using testsupport::random_net;

TEST_CASE("forward: zero network gives zero logits") {
  Rng rng(1);
  auto p = init_mlp(3, std::vector<std::size_t>{5}, 4, rng);
  for (auto& layer : p.layers) {
    for (double& w : layer.weight.data()) w = 0.0;
    for (double& b : layer.bias) b = 0.0;
  }
  const auto cache = forward(p, random_matrix(6, 3, rng));
  CHECK(cache.logits.rows() == 6);
  CHECK(cache.logits.cols() == 4);
  for (double v : cache.logits.data()) CHECK(v == 0.0);
}

TEST_CASE("forward: identity single layer") {
  Rng rng(2);
  auto p = init_mlp(2, {}, 2, rng);
  p.layers[0].weight = Matrix(2, 2, {1.0, 0.0, 0.0, 1.0});
  p.layers[0].bias = {0.0, 0.0};
  const auto cache = forward(p, Matrix(1, 2, {1.0, 0.0}));
  CHECK(cache.logits(0, 0) == 1.0);
  CHECK(cache.logits(0, 1) == 0.0);
}

TEST_CASE("forward: matches scalar-loop oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_net(5, {7, 6}, 4, rng);
    const auto x = random_matrix(9, 5, rng);
    const auto cache = forward(p, x);
    const auto net = oracle::to_net(p);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto z = oracle::logits(net, oracle::Vec(x.row(r).begin(), x.row(r).end()));
      for (std::size_t k = 0; k < z.size(); ++k) CHECK(std::abs(z[k] - cache.logits(r, k)) < 1e-10);
    }
  }
}

TEST_CASE("forward: dimension mismatch is a configuration error") {
  Rng rng(4);
  const auto p = random_net(3, {4}, 2, rng);
  CHECK_THROWS_AS(forward(p, Matrix(2, 5)), ConfigError);
}

TEST_CASE("forward: permuting rows permutes logits") {
  Rng rng(5);
  const auto p = random_net(4, {8}, 3, rng);
  const auto x = random_matrix(6, 4, rng);
  std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  Matrix xp(6, 4);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 4; ++c) xp(r, c) = x(perm[r], c);
  const auto a = forward(p, x).logits;
  const auto b = forward(p, xp).logits;
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t k = 0; k < 3; ++k) CHECK(b(r, k) == a(perm[r], k));
}

TEST_CASE("softmax: symmetric, stable and exact") {
  const auto u = softmax(Matrix(1, 4, {0, 0, 0, 0}));
  for (std::size_t k = 0; k < 4; ++k) CHECK(u(0, k) == doctest::Approx(0.25).epsilon(1e-15));

  const auto big = softmax(Matrix(1, 2, {1000.0, 0.0}));
  CHECK(big(0, 0) == doctest::Approx(1.0));
  CHECK(big(0, 1) < 1e-300);

  const auto s = softmax(Matrix(1, 3, {1.0, 2.0, 3.0}));
  const double denom = std::exp(-2.0) + std::exp(-1.0) + 1.0;
  CHECK(std::abs(s(0, 0) - std::exp(-2.0) / denom) < 1e-10);
  CHECK(std::abs(s(0, 1) - std::exp(-1.0) / denom) < 1e-10);
  CHECK(std::abs(s(0, 2) - 1.0 / denom) < 1e-10);

  const auto extreme = softmax(Matrix(2, 3, {1e4, -1e4, 0.0, -1e4, -1e4, 1e4}));
  CHECK(extreme.probs().all_finite());
}

TEST_CASE("softmax: non-finite logits are a numeric error") {
  CHECK_THROWS_AS(softmax(Matrix(1, 2, {NAN, 0.0})), NumericError);
  CHECK_THROWS_AS(softmax(Matrix(1, 2, {INFINITY, 0.0})), NumericError);
}

TEST_CASE("softmax: rows always lie on the simplex") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = softmax(random_matrix(1 + rng.uniform_index(10), 2 + rng.uniform_index(10), rng, 20.0));
    for (std::size_t r = 0; r < p.batch_size(); ++r) {
      double s = 0.0;
      for (double v : p.probs().row(r)) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("cross_entropy: analytic values and oracle") {
  const auto onehot = PredictionBatch(Matrix(2, 3, {1, 0, 0, 0, 0, 1}));
  const std::vector<Label> y{0, 2};
  CHECK(cross_entropy(onehot, y) == doctest::Approx(0.0));

  const auto uniform = softmax(Matrix(3, 10));
  const std::vector<Label> y3{0, 4, 9};
  CHECK(std::abs(cross_entropy(uniform, y3) - std::log(10.0)) < 1e-12);

  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto probs = testsupport::random_predictions(8, 5, rng);
    const auto labels = testsupport::random_labels(8, 5, rng);
    const double ref = oracle::cross_entropy(testsupport::to_rows(probs.probs()), testsupport::to_ints(labels));
    CHECK(std::abs(cross_entropy(probs, labels) - ref) < 1e-10);
  }
}

TEST_CASE("cross_entropy: clamps zero probabilities") {
  const auto wrong = PredictionBatch(Matrix(1, 2, {1.0, 0.0}));
  const std::vector<Label> y{1};
  CHECK(cross_entropy(wrong, y) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("cross_entropy: label out of range is an input error") {
  const auto p = softmax(Matrix(2, 3));
  CHECK_THROWS_AS(cross_entropy(p, std::vector<Label>{0, 3}), InputError);
  CHECK_THROWS_AS(cross_entropy(p, std::vector<Label>{0, -1}), InputError);
  CHECK_THROWS_AS(cross_entropy(p, std::vector<Label>{0}), InputError);
}

TEST_CASE("backward: zero upstream gives zero gradient") {
  Rng rng(8);
  const auto p = random_net(3, {6}, 4, rng);
  const auto cache = forward(p, random_matrix(5, 3, rng));
  const auto g = backward(p, cache, Matrix(5, 4));
  for (double v : flatten(g)) CHECK(v == 0.0);
}

TEST_CASE("backward: cross-entropy gradient matches finite differences") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_net(2, {8}, 3, rng);
    const auto x = random_matrix(6, 2, rng);
    const auto y = testsupport::random_labels(6, 3, rng);
    const auto cache = forward(p, x);
    const auto g = flatten(backward(p, cache, cross_entropy_grad(softmax(cache.logits), y)));
    auto f = [&](const oracle::Vec& theta) {
      return cross_entropy(softmax(forward(testsupport::with_flat(p, theta), x).logits), y);
    };
    CHECK(oracle::worst_fd_error(f, flatten(p), g, 25, rng) < 1e-4);
  }
}

TEST_CASE("backward: duplicated sample under mean reduction") {
  Rng rng(10);
  const auto p = random_net(3, {5}, 3, rng);
  const auto one = random_matrix(1, 3, rng);
  const Matrix two = vstack(one, one);
  const std::vector<Label> y1{2};
  const std::vector<Label> y2{2, 2};
  const auto c1 = forward(p, one);
  const auto c2 = forward(p, two);
  const auto g1 = flatten(backward(p, c1, cross_entropy_grad(softmax(c1.logits), y1)));
  const auto g2 = flatten(backward(p, c2, cross_entropy_grad(softmax(c2.logits), y2)));
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-12));
}

TEST_CASE("backward: upstream shape mismatch") {
  Rng rng(11);
  const auto p = random_net(3, {5}, 3, rng);
  const auto cache = forward(p, random_matrix(4, 3, rng));
  CHECK_THROWS_AS(backward(p, cache, Matrix(4, 2)), ConfigError);
}

TEST_CASE("sgd_step: direct formula") {
  Rng rng(12);
  auto p = init_mlp(1, {}, 1, rng);
  p.layers[0].weight = Matrix(1, 1, {1.0});
  auto g = GradientSet::zeros_like(p);
  g.layers[0].weight(0, 0) = 0.5;
  CHECK(sgd_step(p, g, 0.1).layers[0].weight(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(sgd_step(p, g, 0.0) == p);
}

TEST_CASE("sgd_step: non-finite gradient is a numeric error") {
  Rng rng(13);
  const auto p = random_net(2, {3}, 2, rng);
  auto g = GradientSet::zeros_like(p);
  g.layers[1].bias[0] = NAN;
  CHECK_THROWS_AS(sgd_step(p, g, 0.1), NumericError);
}

TEST_CASE("sgd_step: seeded two-step run is bit-identical") {
  auto run = [] {
    Rng rng(14);
    auto p = random_net(4, {6}, 3, rng);
    const auto x = random_matrix(8, 4, rng);
    const auto y = testsupport::random_labels(8, 3, rng);
    for (int step = 0; step < 2; ++step) {
      const auto cache = forward(p, x);
      p = sgd_step(std::move(p), backward(p, cache, cross_entropy_grad(softmax(cache.logits), y)), 0.1);
    }
    return flatten(p);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("init_mlp: Glorot bounds, zero bias, valid chain") {
  Rng rng(15);
  const auto p = init_mlp(16, std::vector<std::size_t>{64}, 10, rng);
  CHECK_NOTHROW(p.validate());
  CHECK(p.parameter_count() == 16 * 64 + 64 + 64 * 10 + 10);
  const double l0 = std::sqrt(6.0 / 80.0);
  for (double w : p.layers[0].weight.data()) CHECK(std::abs(w) <= l0);
  for (double b : p.layers[1].bias) CHECK(b == 0.0);
}

TEST_CASE("flatten/assign_flat round trip") {
  Rng rng(16);
  auto p = random_net(3, {4, 5}, 2, rng);
  const auto flat = flatten(p);
  CHECK(flat.size() == p.parameter_count());
  auto q = init_mlp(3, std::vector<std::size_t>{4, 5}, 2, rng);
  assign_flat(q, flat);
  CHECK(q == p);
  CHECK_THROWS_AS(assign_flat(q, std::vector<double>(flat.size() + 1)), ConfigError);
}
