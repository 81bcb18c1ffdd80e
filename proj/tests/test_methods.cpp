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

#include "cilab/errors.hpp"
#include "cilab/methods.hpp"
#include "test_support.hpp"

using namespace cilab;
using testsupport::random_labels;
using testsupport::random_matrix;
using testsupport::random_net;

namespace {

Batch random_batch(std::size_t b, std::size_t dim, std::size_t k, Rng& rng, bool with_logits = false) {
  Batch out{random_matrix(b, dim, rng), random_labels(b, k, rng), std::nullopt};
  if (with_logits) out.stored_logits = random_matrix(b, k, rng);
  return out;
}

double ce_value(const MlpParams& p, const Batch& b) {
  return cross_entropy(softmax(forward(p, b.features).logits), b.labels);
}

double mse_value(const MlpParams& p, const Batch& b) {
  const Matrix z = forward(p, b.features).logits;
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z.data()[i] - b.stored_logits->data()[i];
    s += d * d;
  }
  return s / static_cast<double>(z.size());
}

double fd_error(const MlpParams& p, const std::function<double(const MlpParams&)>& f, const GradientSet& g,
                Rng& rng) {
  auto flat_f = [&](const oracle::Vec& t) { return f(testsupport::with_flat(p, t)); };
  return oracle::worst_fd_error(flat_f, flatten(p), flatten(g), 30, rng);
}

Dataset easy_dataset(std::uint64_t seed, std::size_t classes = 4, double spread = 0.05) {
  SyntheticSpec spec;
  spec.num_classes = classes;
  spec.per_class = 50;
  spec.dim = 8;
  spec.spread = spread;
  spec.seed = seed;
  return make_synthetic_gaussian(spec);
}

TrainConfig small_config(MethodType m, RegularizerType r = RegularizerType::kNone, double lambda = 0.5) {
  TrainConfig cfg;
  cfg.epochs_per_task = 2;
  cfg.batch_size = 16;
  cfg.hidden_dims = {16};
  cfg.method.type = m;
  cfg.regularizer = {r, lambda};
  cfg.per_class_budget = 3;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("er_loss: no replay equals cross-entropy, replay adds a second mean") {
  Rng rng(1);
  const auto net = random_net(4, {6}, 3, rng);
  const auto cur = random_batch(5, 4, 3, rng);
  const auto rep = random_batch(7, 4, 3, rng);
  CHECK(er_loss(net, cur, std::nullopt).value == ce_value(net, cur));
  const auto lg = er_loss(net, cur, rep);
  CHECK(std::abs(lg.value - (ce_value(net, cur) + ce_value(net, rep))) < 1e-12);

  // Same sample as current and replay doubles the gradient.
  const auto one = random_batch(1, 4, 3, rng);
  const auto single = er_loss(net, one, std::nullopt);
  const auto twice = er_loss(net, one, one);
  const auto a = flatten(single.grads), b = flatten(twice.grads);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] - 2.0 * a[i]) < 1e-12);
}

TEST_CASE("der_loss and derpp_loss: reductions and term oracles") {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto net = random_net(3, {5}, 4, rng);
    const auto cur = random_batch(1 + rng.uniform_index(6), 3, 4, rng);
    const auto rep = random_batch(1 + rng.uniform_index(6), 3, 4, rng, true);
    const auto rep2 = random_batch(1 + rng.uniform_index(6), 3, 4, rng);
    const double alpha = rng.uniform01();
    const double beta = rng.uniform01();

    const auto der = der_loss(net, cur, rep, alpha);
    CHECK(std::abs(der.value - (ce_value(net, cur) + alpha * mse_value(net, rep))) < 1e-12);
    CHECK(der_loss(net, cur, rep, 0.0).value == ce_value(net, cur));
    CHECK(der_loss(net, cur, std::nullopt, alpha).value == ce_value(net, cur));

    const auto pp = derpp_loss(net, cur, rep, rep2, alpha, beta);
    CHECK(std::abs(pp.value - (der.value + beta * ce_value(net, rep2))) < 1e-12);
    const auto pp0 = derpp_loss(net, cur, rep, rep2, alpha, 0.0);
    CHECK(std::abs(pp0.value - der.value) < 1e-12);
    const auto f0 = flatten(pp0.grads), fd = flatten(der.grads);
    for (std::size_t k = 0; k < f0.size(); ++k) CHECK(std::abs(f0[k] - fd[k]) < 1e-12);
    const auto er_equiv = derpp_loss(net, cur, rep, rep2, 0.0, 1.0);
    CHECK(std::abs(er_equiv.value - er_loss(net, cur, rep2).value) < 1e-12);

    CHECK(fd_error(net, [&](const MlpParams& p) { return er_loss(p, cur, rep2).value; },
                   er_loss(net, cur, rep2).grads, rng) < 1e-4);
    CHECK(fd_error(net, [&](const MlpParams& p) { return der_loss(p, cur, rep, alpha).value; }, der.grads, rng) <
          1e-4);
    CHECK(fd_error(net, [&](const MlpParams& p) { return derpp_loss(p, cur, rep, rep2, alpha, beta).value; },
                   pp.grads, rng) < 1e-4);
  }
}

TEST_CASE("der_loss: zero when logits match stored") {
  Rng rng(3);
  const auto net = random_net(3, {4}, 3, rng);
  auto rep = random_batch(4, 3, 3, rng);
  rep.stored_logits = forward(net, rep.features).logits;
  CHECK(mse_value(net, rep) == 0.0);
  rep.labels = random_labels(4, 3, rng);
  const auto cur = random_batch(2, 3, 3, rng);
  CHECK(der_loss(net, cur, rep, 0.7).value == ce_value(net, cur));
}

TEST_CASE("methods: empty current batch and missing logits are rejected") {
  Rng rng(4);
  const auto net = random_net(3, {4}, 3, rng);
  const Batch empty{Matrix(0, 3), {}, std::nullopt};
  CHECK_THROWS_AS(er_loss(net, empty, std::nullopt), InputError);
  const auto cur = random_batch(2, 3, 3, rng);
  const auto no_logits = random_batch(2, 3, 3, rng);
  CHECK_THROWS_AS(der_loss(net, cur, no_logits, 0.3), ConfigError);
}

TEST_CASE("train_batch: composition of supervised and regularizer terms") {
  Rng rng(5);
  const auto cur = random_batch(8, 3, 4, rng);

  SUBCASE("no regularizer equals the method loss") {
    auto cfg = small_config(MethodType::kER);
    auto learner = Learner::create(cfg, 3, 4);
    const auto before = learner.params;
    const auto loss = train_batch(learner, cfg, cur, 0);
    CHECK(loss.total == er_loss(before, cur, std::nullopt).value);
    CHECK(loss.reg == 0.0);
    CHECK(learner.buffer.size() > 0);
  }

  SUBCASE("lambda = 0 is bitwise the unregularized step") {
    auto plain = small_config(MethodType::kER);
    auto zero = small_config(MethodType::kER, RegularizerType::kIM, 0.0);
    auto a = Learner::create(plain, 3, 4);
    auto b = Learner::create(zero, 3, 4);
    for (int i = 0; i < 5; ++i) {
      const auto la = train_batch(a, plain, cur, 0);
      const auto lb = train_batch(b, zero, cur, 0);
      CHECK(la.total == lb.total);
    }
    CHECK(a.params == b.params);
    CHECK(a.buffer == b.buffer);
  }

  SUBCASE("IM on the current batch: (1 - lambda) CE + lambda IM") {
    auto cfg = small_config(MethodType::kER, RegularizerType::kIM, 0.5);
    auto learner = Learner::create(cfg, 3, 4);
    const auto p = learner.params;
    const auto loss = train_batch(learner, cfg, cur, 0);
    const auto probs = softmax(forward(p, cur.features).logits);
    const double expected = 0.5 * cross_entropy(probs, cur.labels) + 0.5 * im_loss(probs);
    CHECK(std::abs(loss.total - expected) < 1e-12);

    // The applied step matches the analytic gradient of the same objective.
    auto objective = [&](const MlpParams& q) {
      const auto pr = softmax(forward(q, cur.features).logits);
      return 0.5 * cross_entropy(pr, cur.labels) + 0.5 * im_loss(pr);
    };
    const auto applied = flatten(p);
    const auto after = flatten(learner.params);
    oracle::Vec g(applied.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (applied[i] - after[i]) / cfg.lr;
    CHECK(fd_error(p, objective, gradient_from_flat(p, g), rng) < 1e-4);
  }

  SUBCASE("BF target with an empty buffer contributes nothing") {
    auto cfg = small_config(MethodType::kER, RegularizerType::kIM, 0.5);
    cfg.reg_target = RegTarget::kBuffer;
    auto learner = Learner::create(cfg, 3, 4);
    const auto loss = train_batch(learner, cfg, cur, 0);
    CHECK(loss.reg == 0.0);
  }

  SUBCASE("DER stores the logits of the forward pass used for the step") {
    auto cfg = small_config(MethodType::kDER);
    cfg.per_class_budget = 100;
    auto learner = Learner::create(cfg, 3, 4);
    const auto p = learner.params;
    train_batch(learner, cfg, cur, 0);
    const auto z = forward(p, cur.features).logits;
    REQUIRE(learner.buffer.size() == cur.size());
    for (const auto& e : learner.buffer.entries()) {
      REQUIRE(e.stored_logits.has_value());
      bool found = false;
      for (std::size_t r = 0; r < cur.size(); ++r) {
        const auto row = z.row(r);
        found = found || std::equal(row.begin(), row.end(), e.stored_logits->begin());
      }
      CHECK(found);
    }
  }
}

TEST_CASE("train_task: zero epochs leaves parameters untouched") {
  const auto data = easy_dataset(1);
  const auto stream = split_class_incremental(data, 2, 0);
  auto cfg = small_config(MethodType::kER);
  cfg.epochs_per_task = 0;
  auto learner = Learner::create(cfg, data.dim, data.num_classes);
  const auto before = learner.params;
  const auto logs = train_task(learner, cfg, stream.tasks[0]);
  CHECK(logs.empty());
  CHECK(learner.params == before);
}

TEST_CASE("run_sequence: determinism and matrix shape") {
  const auto data = easy_dataset(2);
  const auto stream = split_class_incremental(data, 2, 0);
  for (auto m : {MethodType::kER, MethodType::kDER, MethodType::kDERPP}) {
    const auto cfg = small_config(m, RegularizerType::kIM);
    const auto a = run_sequence(stream, cfg);
    const auto b = run_sequence(stream, cfg);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.final_params == b.final_params);
    CHECK(a.accuracy.final_column_complete());
    CHECK_FALSE(a.accuracy.at(1, 0).has_value());
    CHECK(a.logs.size() == 2 * cfg.epochs_per_task);
  }
}

TEST_CASE("evaluate_accuracy: pure, bounded, chance level for random weights") {
  Rng rng(6);
  const auto data = easy_dataset(3, 10, 0.3);
  const auto net = random_net(data.dim, {16}, 10, rng);
  const auto copy = net;
  const double a = evaluate_accuracy(net, data.test);
  CHECK(a == evaluate_accuracy(net, data.test));
  CHECK(net == copy);
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
  CHECK_THROWS_AS(evaluate_accuracy(net, std::vector<Sample>{}), InputError);
}

TEST_CASE("run_sequence: separable stream with a large buffer is learned") {
  const auto data = easy_dataset(4);
  const auto stream = split_class_incremental(data, 2, 0);
  auto cfg = small_config(MethodType::kER);
  cfg.epochs_per_task = 10;
  cfg.per_class_budget = 40;
  const auto run = run_sequence(stream, cfg);
  CHECK(compute_acc(run.accuracy) >= 0.95);
}

TEST_CASE("run_sequence: single task") {
  const auto data = easy_dataset(5);
  const auto stream = split_class_incremental(data, 1, 0);
  const auto run = run_sequence(stream, small_config(MethodType::kER));
  CHECK(run.accuracy.num_tasks() == 1);
  CHECK(compute_acc(run.accuracy) == *run.accuracy.at(0, 0));
  CHECK_THROWS_AS(compute_fr(run.accuracy), InputError);
}

TEST_CASE("train_task: task-end cadence fills the buffer after training") {
  const auto data = easy_dataset(6);
  const auto stream = split_class_incremental(data, 2, 0);
  auto cfg = small_config(MethodType::kDER);
  cfg.insert_at = InsertCadence::kTaskEnd;
  auto learner = Learner::create(cfg, data.dim, data.num_classes);
  train_task(learner, cfg, stream.tasks[0]);
  CHECK(learner.buffer.size() == cfg.per_class_budget * stream.tasks[0].class_ids.size());
  const auto z = forward(learner.params, stack_features(learner.buffer.entries().empty()
                                                           ? std::vector<Sample>{}
                                                           : std::vector<Sample>{{learner.buffer.entries()[0].features,
                                                                                  learner.buffer.entries()[0].label}}))
                     .logits;
  const auto row = z.row(0);
  CHECK(std::equal(row.begin(), row.end(), learner.buffer.entries()[0].stored_logits->begin()));
}

TEST_CASE("TrainConfig validation names the field") {
  TrainConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("lr"), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("batch_size"), ConfigError);
  cfg = TrainConfig{};
  cfg.regularizer.weight = 2.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
